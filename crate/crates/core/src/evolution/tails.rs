//! Least-squares tail fits on a solved profile.

use serde::Serialize;

use super::grid::GridFunction;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TailFitModel {
    /// `ln(F'(x)/x) ≈ intercept + slope·x`.
    Max,
    /// `ln(1 − F(x)) ≈ intercept + slope·ln x`.
    Min,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailFit {
    pub model: TailFitModel,
    pub window: (f64, f64),
    pub slope: f64,
    pub intercept: f64,
    /// `C = e^{intercept}` for max, mean of `(1 − F) x^{−slope}` for min.
    pub level: f64,
    pub points: usize,
    pub rms: f64,
}

fn window_nodes(f: &GridFunction, (a, b): (f64, f64)) -> Result<Vec<usize>> {
    let xs = f.xs();
    if !(a > 0.0 && b > a) {
        return Err(Error::BadWindow(format!("[{a}, {b}] is not a positive interval")));
    }
    if b > xs[xs.len() - 1] {
        return Err(Error::BadWindow(format!("{b} lies beyond the grid end {}", xs[xs.len() - 1])));
    }
    let idx: Vec<usize> = (1..xs.len()).filter(|&i| xs[i] >= a && xs[i] <= b).collect();
    if idx.len() < 3 {
        return Err(Error::BadWindow(format!("only {} nodes in [{a}, {b}]", idx.len())));
    }
    Ok(idx)
}

fn derivative(f: &GridFunction, i: usize) -> f64 {
    if let Some(s) = f.slopes() {
        return s[i];
    }
    let (xs, v) = (f.xs(), f.values());
    let hi = (i + 1).min(xs.len() - 1);
    let lo = i - 1;
    (v[hi] - v[lo]) / (xs[hi] - xs[lo])
}

fn regress(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / n).sqrt();
    (slope, intercept, rms)
}

pub fn tail_fit(f: &GridFunction, model: TailFitModel, window: (f64, f64)) -> Result<TailFit> {
    let idx = window_nodes(f, window)?;
    let (xs, v) = (f.xs(), f.values());
    let mut pts = Vec::with_capacity(idx.len());
    for &i in &idx {
        let x = xs[i];
        let y = match model {
            TailFitModel::Max => {
                let d = derivative(f, i);
                if !(d > 0.0) {
                    return Err(Error::BadWindow(format!("F' = {d:e} at x = {x}")));
                }
                (d / x).ln()
            }
            TailFitModel::Min => {
                let g = 1.0 - v[i];
                if !(g >= 1e-14) {
                    return Err(Error::BadWindow(format!("1 − F = {g:e} at x = {x}")));
                }
                g.ln()
            }
        };
        let t = match model {
            TailFitModel::Max => x,
            TailFitModel::Min => x.ln(),
        };
        pts.push((t, y));
    }
    let (slope, intercept, rms) = regress(&pts);
    let level = match model {
        TailFitModel::Max => intercept.exp(),
        TailFitModel::Min => idx.iter().map(|&i| (1.0 - v[i]) * xs[i].powf(-slope)).sum::<f64>() / idx.len() as f64,
    };
    Ok(TailFit { model, window, slope, intercept, level, points: idx.len(), rms })
}

/// Mean of `x^{exponent} (1 − F(x))` over the nodes in the window.
pub fn mean_level(f: &GridFunction, exponent: f64, window: (f64, f64)) -> Result<f64> {
    let idx = window_nodes(f, window)?;
    let (xs, v) = (f.xs(), f.values());
    Ok(idx.iter().map(|&i| xs[i].powf(exponent) * (1.0 - v[i])).sum::<f64>() / idx.len() as f64)
}
