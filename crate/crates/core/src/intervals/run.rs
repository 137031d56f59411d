use rand::Rng;
use serde::{Deserialize, Serialize};

use super::table::{w_entropy, IntervalTable};
use crate::error::Result;
use crate::psi::ChoiceRule;
use crate::rng;

/// Steps 0, 1, 2, 4, … up to `n`, and `n` itself.
pub fn log_schedule(n: u64) -> Vec<u64> {
    let mut s = vec![0];
    let mut p = 1u64;
    while p <= n {
        s.push(p);
        match p.checked_mul(2) {
            Some(q) => p = q,
            None => break,
        }
    }
    if *s.last().unwrap() != n {
        s.push(n);
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyPoint {
    pub step: u64,
    pub count: u64,
    pub raw: f64,
    pub rescaled: f64,
    pub time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LargestPoint {
    pub step: u64,
    pub largest: f64,
    /// `count · L / ln count`; absent while `count = 1`.
    pub rescaled: Option<f64>,
    /// `ln L / ln count`; absent while `count = 1`.
    pub log_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualPoint {
    pub step: u64,
    /// `|∫ x⁻² F̃ − count|`.
    pub mass: f64,
    /// Running entropy (sum of increments) against full recomputation.
    pub entropy_drift: f64,
    /// `|Σ I − 1|`.
    pub length_drift: f64,
    /// `64 · count · ε`.
    pub length_budget: f64,
    pub aggregates_consistent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub seed: u64,
    pub replica: u64,
    pub rng: String,
    pub rule: String,
    pub n0: u64,
    pub steps: u64,
    pub count: u64,
    pub schedule: Vec<u64>,
    pub entropy_trace: Vec<EntropyPoint>,
    pub largest_trace: Vec<LargestPoint>,
    pub invariant_residuals: Vec<ResidualPoint>,
    /// Worst per-step `|ΔH̃ − ℓW(v)| / (ℓ max(|ln ℓ|, 1))`.
    pub max_entropy_increment_residual: f64,
    /// Largest interval never increased.
    pub largest_monotone: bool,
    pub final_time: Option<f64>,
}

impl SimulationReport {
    pub fn invariants_hold(&self) -> bool {
        self.largest_monotone
            && self.max_entropy_increment_residual <= 1e-12
            && self.invariant_residuals.iter().all(|r| {
                r.mass <= 1e-9 * (self.n0 + r.step) as f64
                    && r.length_drift <= r.length_budget
                    && r.aggregates_consistent
            })
    }
}

/// Runs `n_steps` splits and observes the table on `schedule` (steps at
/// which to sample; must be increasing and within `0..=n_steps`).
pub fn run<R: Rng + ?Sized>(
    table: &mut IntervalTable,
    rule: &ChoiceRule,
    n_steps: u64,
    schedule: &[u64],
    rng: &mut R,
    ids: (u64, u64),
) -> Result<SimulationReport> {
    let n0 = table.count() as u64 - table.step_index();
    let mut report = SimulationReport {
        seed: ids.0,
        replica: ids.1,
        rng: rng::ALGORITHM.to_string(),
        rule: rule.to_string(),
        n0,
        steps: n_steps,
        count: 0,
        schedule: schedule.to_vec(),
        entropy_trace: Vec::new(),
        largest_trace: Vec::new(),
        invariant_residuals: Vec::new(),
        max_entropy_increment_residual: 0.0,
        largest_monotone: true,
        final_time: None,
    };
    let mut ticks = schedule.iter().copied().peekable();
    let start = table.step_index();
    let mut largest = table.largest();
    observe(table, &mut report, 0, &mut ticks);
    for _ in 0..n_steps {
        let ev = table.split_step(rule, rng)?;
        let (a, b) = ev.new_lengths;
        let ell = ev.chosen_length;
        let delta = a * a.ln() + b * b.ln() - ell * ell.ln();
        let scale = ell * ell.ln().abs().max(1.0);
        let res = (delta - ell * w_entropy(ev.fraction)).abs() / scale;
        report.max_entropy_increment_residual = report.max_entropy_increment_residual.max(res);
        let l = table.largest();
        if l > largest {
            report.largest_monotone = false;
        }
        largest = l;
        observe(table, &mut report, ev.step - start, &mut ticks);
    }
    report.count = table.count() as u64;
    report.final_time = table.clock();
    Ok(report)
}

fn observe<I: Iterator<Item = u64>>(
    table: &IntervalTable,
    report: &mut SimulationReport,
    step: u64,
    ticks: &mut std::iter::Peekable<I>,
) {
    if ticks.peek() != Some(&step) {
        return;
    }
    ticks.next();
    let count = table.count() as u64;
    let (raw, rescaled) = table.entropy();
    report.entropy_trace.push(EntropyPoint { step, count, raw, rescaled, time: table.clock() });
    let largest = table.largest();
    let lnc = (count as f64).ln();
    report.largest_trace.push(LargestPoint {
        step,
        largest,
        rescaled: (count > 1).then(|| count as f64 * largest / lnc),
        log_ratio: (count > 1).then(|| largest.ln() / lnc),
    });
    report.invariant_residuals.push(ResidualPoint {
        step,
        mass: table.mass_residual(),
        entropy_drift: (table.entropy_running() - raw).abs(),
        length_drift: table.length_drift(),
        length_budget: 64.0 * count as f64 * f64::EPSILON,
        aggregates_consistent: table.audit(),
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_shape() {
        assert_eq!(log_schedule(0), vec![0]);
        assert_eq!(log_schedule(1), vec![0, 1]);
        assert_eq!(log_schedule(10), vec![0, 1, 2, 4, 8, 10]);
        assert_eq!(log_schedule(8), vec![0, 1, 2, 4, 8]);
    }

    #[test]
    fn zero_steps_reports_initial_state() {
        let mut t = IntervalTable::from_config(&[0.5, 0.5]).unwrap();
        let mut r = rng::stream(1, 0);
        let rep = run(&mut t, &ChoiceRule::MaxK(2), 0, &log_schedule(0), &mut r, (1, 0)).unwrap();
        assert_eq!(rep.count, 2);
        assert_eq!(rep.entropy_trace.len(), 1);
        assert_eq!(rep.invariant_residuals[0].step, 0);
    }

    #[test]
    fn same_seed_same_report() {
        let go = || {
            let mut t = IntervalTable::from_config(&[1.0]).unwrap();
            let mut r = rng::stream(9, 0);
            run(&mut t, &ChoiceRule::MinK(2), 5000, &log_schedule(5000), &mut r, (9, 0)).unwrap()
        };
        let a = serde_json::to_string(&go()).unwrap();
        let b = serde_json::to_string(&go()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn invariants_on_small_run() {
        let mut t = IntervalTable::from_config(&[1.0]).unwrap();
        let mut r = rng::stream(4, 0);
        let rep = run(&mut t, &ChoiceRule::MaxK(2), 20_000, &log_schedule(20_000), &mut r, (4, 0)).unwrap();
        assert_eq!(rep.count, 20_001);
        assert!(rep.invariants_hold(), "{:?}", rep.invariant_residuals.last());
        for p in &rep.invariant_residuals {
            assert!(p.entropy_drift < 1e-10);
        }
    }
}
