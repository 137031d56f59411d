use psi_intervals::evolution::{
    self, fixed_point, ode_solve, op_s, op_t_series, Grid, GridFunction, TailModel, Trajectory,
};
use psi_intervals::intervals::{log_schedule, run, IntervalTable};
use psi_intervals::{metrics, rng, ChoiceRule};
use rand::Rng;

fn sup(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn rule(s: &str) -> ChoiceRule {
    ChoiceRule::parse(s).unwrap()
}

fn solved(r: &ChoiceRule) -> GridFunction {
    let g = Grid::solver_default(r.default_grid_max()).unwrap();
    fixed_point(r, &g, 1e-10).unwrap().0
}

/// `λ K + (1 − λ) E` of the Kakutani limit and the size-biased exponential.
fn mixture(g: &Grid, lambda: f64) -> GridFunction {
    let k = GridFunction::kakutani_limit(g);
    let e = GridFunction::size_biased_exponential(g);
    let v = k.values().iter().zip(e.values()).map(|(a, b)| lambda * a + (1.0 - lambda) * b).collect();
    GridFunction::from_values(g, v, 1.0, TailModel::Exponential { rate: 1.0 }).unwrap()
}

#[test]
fn fixed_point_is_stationary_under_evolution() {
    for r in ["max:2", "min:2", "uniform"] {
        let r = rule(r);
        let f = solved(&r);
        let traj = evolution::evolve(&r, &f, 2.0, 8).unwrap();
        let worst = traj.frames.iter().map(|fr| sup(fr.values(), f.values())).fold(0.0, f64::max);
        assert!(worst <= 1e-3, "{r}: {worst:e}");
    }
}

#[test]
fn mild_form_reproduces_a_stationary_path() {
    let r = rule("max:2");
    let f = solved(&r);
    // Trapezoid in s is second order; Δs = 0.02 keeps the error near 5e-5.
    let steps = 250;
    let times: Vec<f64> = (0..=steps).map(|k| 5.0 * k as f64 / steps as f64).collect();
    let traj = Trajectory::new(times, vec![f.clone(); steps + 1]).unwrap();
    for t in [0.5, 1.0, 2.5, 5.0] {
        let s = op_s(&r, &traj, t).unwrap();
        let d = sup(&s.values, f.values());
        assert!(d <= 1e-4, "t = {t}: {d:e}");
    }
    assert!(op_s(&r, &traj, 5.5).is_err());
}

#[test]
fn mild_form_matches_the_evolved_path() {
    let r = rule("uniform");
    let g = Grid::solver_default(r.default_grid_max()).unwrap();
    let f0 = GridFunction::kakutani_limit(&g);
    let traj = evolution::evolve(&r, &f0, 1.0, 100).unwrap();
    let s = op_s(&r, &traj, 1.0).unwrap();
    let d = sup(&s.values, traj.last().values());
    assert!(d <= 1e-3, "{d:e}");
}

#[test]
fn mild_form_shift_identity() {
    // 𝒮(F^{(s)})_t = 𝒮(F)_{s+t} − T_t(𝒮(F)_s − F_s) for F^{(s)}_r = F_{s+r}.
    // Smooth start: repeated pull-backs of a kink differ at the interpolation level.
    let r = rule("min:2");
    let g = Grid::solver_default(r.default_grid_max()).unwrap();
    let traj = evolution::evolve(&r, &GridFunction::size_biased_exponential(&g), 2.0, 40).unwrap();
    let k = traj.times.iter().position(|&x| (x - 1.0).abs() < 1e-12).unwrap();
    let s = traj.times[k];
    let shifted = Trajectory::new(traj.times[k..].iter().map(|x| x - s).collect(), traj.frames[k..].to_vec()).unwrap();
    let gap = op_s(&r, &traj, s).unwrap();
    let mut gap = gap.clone();
    for (v, f) in gap.values.iter_mut().zip(traj.frames[k].values()) {
        *v -= f;
    }
    gap.q -= traj.frames[k].q();
    for t in [0.25, 0.5, 1.0] {
        let lhs = op_s(&r, &shifted, t).unwrap();
        let full = op_s(&r, &traj, s + t).unwrap();
        let corr = op_t_series(t, &gap);
        let rhs: Vec<f64> = full.values.iter().zip(&corr.values).map(|(a, b)| a - b).collect();
        let d = sup(&lhs.values, &rhs);
        assert!(d <= 1e-6, "t = {t}: {d:e}");
    }
}

#[test]
fn picard_and_shooting_agree() {
    for r in ["max:2", "min:2", "uniform"] {
        let r = rule(r);
        let g = Grid::solver_default(r.default_grid_max()).unwrap();
        let (a, _) = fixed_point(&r, &g, 1e-10).unwrap();
        let (b, _) = ode_solve(&r, &g, 1e-10).unwrap();
        let d = sup(a.values(), b.values());
        assert!(d <= 1e-3, "{r}: {d:e}");
    }
}

#[test]
fn random_pairs_contract() {
    let mut rng = rng::stream(11, 0);
    for r in ["uniform", "max:2", "min:2"] {
        let r = rule(r);
        let g = Grid::solver_default(r.default_grid_max()).unwrap();
        for _ in 0..3 {
            let (la, lb): (f64, f64) = (rng.gen(), rng.gen());
            let f0 = mixture(&g, la);
            let g0 = mixture(&g, lb);
            let d0 = metrics::d_candy(&f0, &g0).unwrap();
            let tf = evolution::evolve(&r, &f0, 2.0, 8).unwrap();
            let tg = evolution::evolve(&r, &g0, 2.0, 8).unwrap();
            let mut prev = f64::INFINITY;
            for (t, (a, b)) in tf.times.iter().zip(tf.frames.iter().zip(&tg.frames)) {
                // e^t d_candy(F_t, G_t) is the distance of the rescaled pair.
                let scaled = t.exp() * metrics::d_candy(a, b).unwrap();
                assert!(scaled <= 1.05 * d0, "{r} λ=({la:.3},{lb:.3}) t={t}: {scaled:e} vs {d0:e}");
                assert!(scaled <= prev * (1.0 + 1e-3) + 1e-12, "{r} t={t}: {scaled:e} after {prev:e}");
                prev = scaled;
            }
        }
    }
}

#[test]
fn choice_samples_follow_the_cdf() {
    let r = rule("max:3");
    let mut rng = rng::stream(5, 0);
    let n = 100_000;
    let mut u: Vec<f64> = (0..n).map(|_| r.sample(&mut rng)).collect();
    u.sort_by(f64::total_cmp);
    let ks = u
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = r.cdf(x).unwrap();
            (c - i as f64 / n as f64).abs().max((c - (i + 1) as f64 / n as f64).abs())
        })
        .fold(0.0, f64::max);
    // DKW at 99.9%: sqrt(ln(2/0.001) / 2n) ≈ 0.0062
    assert!(ks <= 0.01, "{ks}");
}

#[test]
fn uniform_run_histograms() {
    let r = rule("uniform");
    let mut table = IntervalTable::from_config(&[1.0]).unwrap().with_positions();
    let mut rng = rng::stream(3, 0);
    let n = 1_000_000;
    run(&mut table, &r, 100_000, &[], &mut rng, (3, 0)).unwrap();
    assert!(table.audit());
    assert!(table.positions_tile(1e-9).unwrap());
    run(&mut table, &r, n - 100_000, &log_schedule(n - 100_000), &mut rng, (3, 0)).unwrap();

    // Rescaled lengths against bin averages of e^{-x}.
    let h = table.density_histogram(64, 4.0).unwrap();
    let w = h.width();
    let worst = h
        .density()
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let (a, b) = (i as f64 * w, (i + 1) as f64 * w);
            (d - ((-a).exp() - (-b).exp()) / w).abs()
        })
        .fold(0.0, f64::max);
    assert!(worst <= 0.02, "{worst}");

    let p = table.position_histogram(128).unwrap();
    for d in p.density() {
        assert!((0.9..=1.1).contains(&d), "{d}");
    }
}
