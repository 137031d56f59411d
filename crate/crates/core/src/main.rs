fn main() {
    std::process::exit(psi_intervals::cli::main());
}
