//! Pooled rescaled lengths written by `simulate` and read by `compare`.
//!
//! `rescaled_lengths.bin` holds little-endian `f64` pairs `(x, w)`: a rescaled
//! length `x = count · I` and its size-biased weight `w = I / (total · R)` over
//! `R` replicas, sorted by `x`.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::evolution::{Grid, GridFunction, TailModel};

pub const FILE: &str = "rescaled_lengths.bin";

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSample {
    /// `(x, w)` sorted by `x`; weights sum to 1.
    pub points: Vec<(f64, f64)>,
}

impl WeightedSample {
    pub fn new(mut points: Vec<(f64, f64)>) -> Self {
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        WeightedSample { points }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut bytes = Vec::with_capacity(16 * self.points.len());
        for &(x, w) in &self.points {
            bytes.extend_from_slice(&x.to_le_bytes());
            bytes.extend_from_slice(&w.to_le_bytes());
        }
        fs::write(path, bytes)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path)?;
        if bytes.len() % 16 != 0 {
            return Err(Error::Parse(format!("{}: truncated sample file", path.display())));
        }
        let f = |c: &[u8]| f64::from_le_bytes(c.try_into().expect("8 bytes"));
        let points = bytes.chunks_exact(16).map(|c| (f(&c[..8]), f(&c[8..]))).collect();
        Ok(WeightedSample::new(points))
    }

    /// Right-continuous CDF after each distinct `x`: `(x, F(x))`.
    fn steps(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        let mut acc = 0.0;
        for &(x, w) in &self.points {
            acc += w;
            match out.last_mut() {
                Some(last) if last.0 == x => last.1 = acc,
                _ => out.push((x, acc)),
            }
        }
        out
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let k = self.points.partition_point(|p| p.0 <= x);
        self.points[..k].iter().map(|p| p.1).sum::<f64>().min(1.0)
    }

    /// `sup_x |F_n(x) − F(x)|` for continuous `F`, checked on both sides of every jump.
    pub fn ks_against(&self, f: &GridFunction) -> f64 {
        let mut before = 0.0;
        let mut sup: f64 = 0.0;
        for (x, after) in self.steps() {
            let v = f.eval(x);
            sup = sup.max((before - v).abs()).max((after - v).abs());
            before = after;
        }
        sup
    }

    /// Two-sample `sup_x |F_n(x) − G_m(x)|`.
    pub fn ks_two_sample(&self, other: &WeightedSample) -> f64 {
        let (a, b) = (self.steps(), other.steps());
        let (mut i, mut j) = (0, 0);
        let (mut fa, mut fb) = (0.0f64, 0.0f64);
        let mut sup: f64 = 0.0;
        while i < a.len() || j < b.len() {
            let xa = a.get(i).map_or(f64::INFINITY, |p| p.0);
            let xb = b.get(j).map_or(f64::INFINITY, |p| p.0);
            let x = xa.min(xb);
            if xa == x {
                fa = a[i].1;
                i += 1;
            }
            if xb == x {
                fb = b[j].1;
                j += 1;
            }
            sup = sup.max((fa - fb).abs());
        }
        sup
    }

    /// The empirical CDF sampled at the nodes of `grid`.
    pub fn on_grid(&self, grid: &Grid) -> Result<GridFunction> {
        let mut values = Vec::with_capacity(grid.len());
        let mut k = 0;
        let mut acc = 0.0;
        for &x in grid.xs() {
            while k < self.points.len() && self.points[k].0 <= x {
                acc += self.points[k].1;
                k += 1;
            }
            values.push(acc.min(1.0));
        }
        let mut prev = 0.0;
        for v in values.iter_mut() {
            *v = v.max(prev);
            prev = *v;
        }
        GridFunction::from_values(grid, values, 1.0, TailModel::Truncated)
    }
}
