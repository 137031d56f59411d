//! Command-line front end.
//!
//! Exit status: 0 success, 2 invalid input, 3 solver failure, 4 a `compare`
//! threshold was exceeded.

pub mod sample;

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolution::{
    self, io, mean_level, min_k_phase, tail_fit, FixedPointOptions, Grid, GridFunction, SolveReport, TailFit,
    TailFitModel,
};
use crate::intervals::{log_schedule, run, Histogram, IntervalTable, SimulationReport};
use crate::metrics;
use crate::psi::ChoiceRule;
use crate::rng;
use sample::WeightedSample;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_THRESHOLD: i32 = 4;

const OUT_ENV: &str = "PSI_INTERVALS_OUT";

#[derive(Debug, Parser)]
#[command(name = "psi-intervals", version, about = "Interval splitting with choice: simulate, solve, compare")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the splitting process and write histograms and a report.
    Simulate(SimulateArgs),
    /// Solve for the limiting profile.
    Solve(SolveArgs),
    /// Evolve two profiles deterministically and tabulate their candy distance.
    Evolve(EvolveArgs),
    /// Compare a simulation against a solved profile (or another simulation).
    Compare(CompareArgs),
    /// Fit the tail of a solved profile.
    Tails(TailsArgs),
    /// Min-k phase-plane shooting for the tail constant.
    Phase(PhaseArgs),
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("start").required(true).args(["init", "init_random"]))]
struct SimulateArgs {
    /// `max:K`, `min:K`, `uniform`, `kakutani` or `table:PATH`.
    #[arg(long)]
    psi: String,
    /// Number of splits; accepts `1e6`.
    #[arg(long, value_parser = parse_count)]
    steps: u64,
    #[arg(long)]
    seed: u64,
    /// Initial lengths `L1,L2,…`, summing to 1.
    #[arg(long, value_delimiter = ',')]
    init: Option<Vec<f64>>,
    /// `M` intervals cut by uniform points.
    #[arg(long)]
    init_random: Option<usize>,
    #[arg(long, default_value_t = 1024)]
    bins: usize,
    #[arg(long, default_value_t = 4.0)]
    xmax: f64,
    #[arg(long)]
    track_positions: bool,
    #[arg(long, default_value_t = 128)]
    position_bins: usize,
    #[arg(long)]
    clock: bool,
    #[arg(long, default_value_t = 1)]
    replicas: u64,
    #[arg(long, env = OUT_ENV)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SolveMethod {
    Picard,
    Shoot,
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// `max:K`, `min:K`, `uniform`, `kakutani` or `table:PATH`.
    #[arg(long)]
    psi: String,
    #[arg(long, value_enum, default_value = "picard")]
    method: SolveMethod,
    #[arg(long, default_value_t = Grid::DEFAULT_POINTS)]
    grid_points: usize,
    #[arg(long, default_value_t = Grid::DEFAULT_XMIN)]
    grid_min: f64,
    /// Defaults to 40 for light tails and 1e4 for power tails.
    #[arg(long)]
    grid_max: Option<f64>,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 200)]
    max_iterations: usize,
    /// Solution CSV; defaults to `solution.csv` in the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvolveArgs {
    /// `max:K`, `min:K`, `uniform`, `kakutani` or `table:PATH`.
    #[arg(long)]
    psi: String,
    #[arg(long)]
    f0: PathBuf,
    #[arg(long)]
    g0: PathBuf,
    #[arg(long)]
    t: f64,
    #[arg(long)]
    steps: usize,
    #[arg(long, env = OUT_ENV)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long)]
    sim: PathBuf,
    /// A solution CSV, or a second simulation directory.
    #[arg(long)]
    solution: PathBuf,
    #[arg(long, default_value_t = 0.01)]
    threshold: f64,
    /// Also write the comparison JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FitModel {
    Max,
    Min,
}

#[derive(Debug, Args)]
struct TailsArgs {
    #[arg(long)]
    solution: PathBuf,
    #[arg(long, value_enum)]
    model: FitModel,
    #[arg(long, value_parser = parse_window)]
    window: (f64, f64),
    /// For `min`: also average `x^E (1 − F)` with this fixed exponent.
    #[arg(long)]
    exponent: Option<f64>,
}

#[derive(Debug, Args)]
struct PhaseArgs {
    #[arg(long)]
    k: f64,
    #[arg(long, default_value_t = 40.0)]
    horizon: f64,
    /// Also write the orbit as `t,G,H`.
    #[arg(long)]
    trace: Option<PathBuf>,
}

fn parse_count(s: &str) -> std::result::Result<u64, String> {
    if let Ok(n) = s.parse::<u64>() {
        return Ok(n);
    }
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a count"))?;
    if v < 0.0 || v.fract() != 0.0 || v > u64::MAX as f64 {
        return Err(format!("`{s}` is not a nonnegative integer"));
    }
    Ok(v as u64)
}

fn parse_window(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("`{s}`: expected A,B"))?;
    let p = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
    Ok((p(a)?, p(b)?))
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NonConvergence { .. } | Error::Divergence { .. } | Error::Bracketing(_) | Error::Refinement { .. } => {
            EXIT_SOLVER
        }
        _ => EXIT_INVALID,
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = std::io::stdout().lock();
    writeln!(out, "{}", serde_json::to_string_pretty(value)?)?;
    Ok(())
}

struct Replica {
    report: SimulationReport,
    lengths: Histogram,
    positions: Option<Histogram>,
    sample: Vec<(f64, f64)>,
}

fn simulate_one(a: &SimulateArgs, rule: &ChoiceRule, replica: u64) -> Result<Replica> {
    let mut rng = rng::stream(a.seed, replica);
    let config = match (&a.init, a.init_random) {
        (Some(l), _) => l.clone(),
        (None, Some(m)) => IntervalTable::random_config(m, &mut rng)?,
        (None, None) => return Err(Error::EmptyConfig),
    };
    let mut table = IntervalTable::from_config(&config)?;
    if a.track_positions {
        table = table.with_positions();
    }
    if a.clock {
        table = table.with_clock();
    }
    let report = run(&mut table, rule, a.steps, &log_schedule(a.steps), &mut rng, (a.seed, replica))?;
    let lengths = table.density_histogram(a.bins, a.xmax)?;
    let positions = if a.track_positions { Some(table.position_histogram(a.position_bins)?) } else { None };
    let n = table.count() as f64;
    let total = table.total_length();
    let r = a.replicas as f64;
    let sample = table.sorted_lengths().into_iter().map(|l| (n * l, l / total / r)).collect();
    Ok(Replica { report, lengths, positions, sample })
}

fn simulate(a: SimulateArgs) -> Result<i32> {
    let rule = ChoiceRule::parse(&a.psi)?;
    if a.replicas == 0 {
        return Err(Error::domain(0.0, "replicas >= 1"));
    }
    fs::create_dir_all(&a.out)?;
    let results: Vec<Result<Replica>> = std::thread::scope(|s| {
        let (a, rule) = (&a, &rule);
        let handles: Vec<_> = (0..a.replicas).map(|r| s.spawn(move || simulate_one(a, rule, r))).collect();
        handles.into_iter().map(|h| h.join().expect("replica thread panicked")).collect()
    });
    let replicas = results.into_iter().collect::<Result<Vec<_>>>()?;

    let mut lengths = replicas[0].lengths.clone();
    let mut positions = replicas[0].positions.clone();
    let mut pooled = Vec::new();
    for (k, rep) in replicas.iter().enumerate() {
        if k > 0 {
            lengths.merge(&rep.lengths)?;
            if let (Some(p), Some(q)) = (positions.as_mut(), rep.positions.as_ref()) {
                p.merge(q)?;
            }
        }
        pooled.extend_from_slice(&rep.sample);
    }
    fs::write(a.out.join("histogram.csv"), lengths.to_csv())?;
    if let Some(p) = &positions {
        fs::write(a.out.join("positions.csv"), p.to_csv())?;
    }
    let sample = WeightedSample::new(pooled);
    sample.write(&a.out.join(sample::FILE))?;
    let grid = Grid::geometric(1e-3, 40.0, 1024)?;
    let ecdf = sample.on_grid(&grid)?;
    io::write_solution::<()>(&a.out.join("empirical_cdf.csv"), &ecdf, None)?;
    for (k, rep) in replicas.iter().enumerate() {
        let name = if k == 0 { "report.json".to_string() } else { format!("report_{k}.json") };
        write_json(&a.out.join(name), &rep.report)?;
    }
    let first = &replicas[0].report;
    eprintln!(
        "{}: {} replica(s), {} steps each, {} intervals, invariants {}",
        first.rule,
        a.replicas,
        first.steps,
        first.count,
        if replicas.iter().all(|r| r.report.invariants_hold()) { "hold" } else { "VIOLATED" }
    );
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct SolveOutput<'a> {
    #[serde(flatten)]
    report: &'a SolveReport,
    /// Fit on `[8, 14]` for light tails, `[100, 1000]` for min-k.
    #[serde(skip_serializing_if = "Option::is_none")]
    tail_fit: Option<TailFit>,
    /// Mean of `x^{1/(k−1)} (1 − F)` over `[100, 1000]` for min-k rules.
    #[serde(skip_serializing_if = "Option::is_none")]
    tail_level: Option<f64>,
}

fn solve(a: SolveArgs) -> Result<i32> {
    let rule = ChoiceRule::parse(&a.psi)?;
    let out = match a.out {
        Some(p) => p,
        None => std::env::var_os(OUT_ENV)
            .map(|d| PathBuf::from(d).join("solution.csv"))
            .ok_or_else(|| Error::Parse(format!("--out not given and {OUT_ENV} unset")))?,
    };
    let grid_max = a.grid_max.unwrap_or_else(|| rule.default_grid_max());
    let grid = Grid::geometric(a.grid_min, grid_max, a.grid_points)?;
    let assumptions = rule.check_assumptions();
    if let Some(v) = &assumptions.violation {
        eprintln!("warning: {v}");
    }
    let solved = match a.method {
        SolveMethod::Picard => {
            let opts = FixedPointOptions { tol: a.tol, max_iterations: a.max_iterations, ..Default::default() };
            evolution::fixed_point_with(&rule, &grid, opts, None)
        }
        SolveMethod::Shoot => evolution::ode_solve(&rule, &grid, a.tol),
    };
    let (f, report) = match solved {
        Ok(x) => x,
        Err(e) => {
            if let Error::NonConvergence { residual, .. } | Error::Divergence { residual, .. } = &e {
                eprintln!("last residual {residual:e}");
            }
            return Err(e);
        }
    };
    let (tail_fit, tail_level) = match rule {
        ChoiceRule::MinK(k) if grid_max >= 1000.0 => (
            tail_fit(&f, TailFitModel::Min, (100.0, 1000.0)).ok(),
            mean_level(&f, 1.0 / (k as f64 - 1.0), (100.0, 1000.0)).ok(),
        ),
        _ if grid_max >= 14.0 && rule.tail_kind() != crate::psi::TailKind::Truncated => {
            (tail_fit(&f, TailFitModel::Max, (8.0, 14.0)).ok(), None)
        }
        _ => (None, None),
    };
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let output = SolveOutput { report: &report, tail_fit, tail_level };
    io::write_solution(&out, &f, Some(&output))?;
    eprintln!(
        "{} ({:?}): {} iterations, candy {:.12}, mass {:.12}, drift {:.12}",
        report.rule, report.method, report.iterations, report.candy_norm, report.mass, report.drift
    );
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct EvolveSummary {
    d0: f64,
    final_ratio: f64,
    max_ratio: f64,
}

fn evolve_cmd(a: EvolveArgs) -> Result<i32> {
    let rule = ChoiceRule::parse(&a.psi)?;
    let (f0, _) = io::read_solution(&a.f0)?;
    let (g0, _) = io::read_solution(&a.g0)?;
    if f0.grid() != g0.grid() {
        return Err(Error::GridMismatch);
    }
    let tf = evolution::evolve(&rule, &f0, a.t, a.steps)?;
    let tg = evolution::evolve(&rule, &g0, a.t, a.steps)?;
    fs::create_dir_all(&a.out)?;
    io::write_trajectory(&a.out.join("f"), &tf)?;
    io::write_trajectory(&a.out.join("g"), &tg)?;
    let rows = contraction_rows(&tf.times, &tf.frames, &tg.frames)?;
    io::write_contraction(&a.out.join("contraction.csv"), &rows)?;
    let summary = EvolveSummary {
        d0: rows[0].d_candy,
        final_ratio: rows.last().unwrap().ratio,
        max_ratio: rows.iter().map(|r| r.ratio).fold(0.0, f64::max),
    };
    print_json(&summary)?;
    Ok(EXIT_OK)
}

/// `d_candy(F_t, G_t)` against `e^{−t} d_candy(F_0, G_0)`.
pub fn contraction_rows(times: &[f64], f: &[GridFunction], g: &[GridFunction]) -> Result<Vec<io::ContractionRow>> {
    let d0 = metrics::d_candy(&f[0], &g[0])?;
    times
        .iter()
        .zip(f.iter().zip(g))
        .map(|(&t, (a, b))| {
            let d = metrics::d_candy(a, b)?;
            let bound = (-t).exp() * d0;
            let ratio = if bound > 0.0 { d / bound } else { 0.0 };
            Ok(io::ContractionRow { t, d_candy: d, bound, ratio })
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct Comparison {
    sim: String,
    against: String,
    ks: f64,
    d_candy: f64,
    threshold: f64,
    pass: bool,
}

fn compare(a: CompareArgs) -> Result<i32> {
    let sim = WeightedSample::read(&a.sim.join(sample::FILE))?;
    let (ks, d_candy) = if a.solution.is_dir() {
        let other = WeightedSample::read(&a.solution.join(sample::FILE))?;
        let grid = Grid::geometric(1e-3, 40.0, 1024)?;
        (sim.ks_two_sample(&other), metrics::d_candy(&sim.on_grid(&grid)?, &other.on_grid(&grid)?)?)
    } else {
        let (f, _) = io::read_solution(&a.solution)?;
        (sim.ks_against(&f), metrics::d_candy(&sim.on_grid(f.grid())?, &f)?)
    };
    let pass = ks <= a.threshold;
    let c = Comparison {
        sim: a.sim.display().to_string(),
        against: a.solution.display().to_string(),
        ks,
        d_candy,
        threshold: a.threshold,
        pass,
    };
    print_json(&c)?;
    if let Some(p) = &a.out {
        write_json(p, &c)?;
    }
    Ok(if pass { EXIT_OK } else { EXIT_THRESHOLD })
}

#[derive(Debug, Serialize)]
struct TailsOutput {
    #[serde(flatten)]
    fit: TailFit,
    #[serde(skip_serializing_if = "Option::is_none")]
    fixed_exponent_level: Option<f64>,
}

fn tails(a: TailsArgs) -> Result<i32> {
    let (f, _) = io::read_solution(&a.solution)?;
    let model = match a.model {
        FitModel::Max => TailFitModel::Max,
        FitModel::Min => TailFitModel::Min,
    };
    let fit = tail_fit(&f, model, a.window)?;
    let fixed_exponent_level = a.exponent.map(|e| mean_level(&f, e, a.window)).transpose()?;
    print_json(&TailsOutput { fit, fixed_exponent_level })?;
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct PhaseOutput {
    k: f64,
    g_infinity: f64,
    c_k: f64,
    curvature: f64,
    relative_error: f64,
}

fn phase(a: PhaseArgs) -> Result<i32> {
    let r = min_k_phase(a.k, a.horizon)?;
    if let Some(p) = &a.trace {
        let mut w = csv::Writer::from_path(p).map_err(|e| Error::Parse(e.to_string()))?;
        w.write_record(["t", "G", "H"]).map_err(|e| Error::Parse(e.to_string()))?;
        for (t, g, h) in &r.trace {
            w.write_record([t.to_string(), g.to_string(), h.to_string()]).map_err(|e| Error::Parse(e.to_string()))?;
        }
        w.flush()?;
    }
    print_json(&PhaseOutput {
        k: r.k,
        g_infinity: r.g_infinity,
        c_k: r.c_k,
        curvature: r.curvature,
        relative_error: (r.g_infinity - r.c_k).abs() / r.c_k,
    })?;
    Ok(EXIT_OK)
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Solve(a) => solve(a),
        Command::Evolve(a) => evolve_cmd(a),
        Command::Compare(a) => compare(a),
        Command::Tails(a) => tails(a),
        Command::Phase(a) => phase(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn main() -> i32 {
    run_with(std::env::args_os())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn counts_and_windows() {
        assert_eq!(parse_count("1e6"), Ok(1_000_000));
        assert_eq!(parse_count("42"), Ok(42));
        assert!(parse_count("1.5").is_err());
        assert!(parse_count("-3").is_err());
        assert_eq!(parse_window("8,14"), Ok((8.0, 14.0)));
        assert!(parse_window("8").is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::NonConvergence { iterations: 1, residual: 1.0 }), EXIT_SOLVER);
        assert_eq!(exit_code(&Error::InvalidRule("x".into())), EXIT_INVALID);
        assert_eq!(run_with(["psi-intervals", "solve", "--psi", "nope", "--out", "/dev/null"]), EXIT_INVALID);
    }
}
