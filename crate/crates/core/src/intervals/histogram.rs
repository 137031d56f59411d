use std::fmt::Write as _;

use serde::Serialize;

use super::table::IntervalTable;
use crate::error::{Error, Result};

/// Equal-width bins on `[0, xmax)` normalized as a probability density, with
/// the mass at or beyond `xmax` kept apart.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub xmax: f64,
    pub counts: Vec<u64>,
    pub overflow: u64,
    pub total: u64,
}

impl Histogram {
    pub fn new(bins: usize, xmax: f64) -> Result<Self> {
        if bins == 0 {
            return Err(Error::domain(0.0, "bins >= 1"));
        }
        if !(xmax > 0.0) || !xmax.is_finite() {
            return Err(Error::domain(xmax, "xmax > 0"));
        }
        Ok(Histogram { xmax, counts: vec![0; bins], overflow: 0, total: 0 })
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn width(&self) -> f64 {
        self.xmax / self.bins() as f64
    }

    pub fn add(&mut self, x: f64) {
        self.total += 1;
        if x >= self.xmax {
            self.overflow += 1;
            return;
        }
        let i = ((x / self.width()) as usize).min(self.bins() - 1);
        self.counts[i] += 1;
    }

    pub fn density(&self) -> Vec<f64> {
        let norm = self.total as f64 * self.width();
        self.counts.iter().map(|&c| if self.total == 0 { 0.0 } else { c as f64 / norm }).collect()
    }

    pub fn overflow_mass(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.overflow as f64 / self.total as f64
        }
    }

    /// Adds the counts of `other`, which must share the binning.
    pub fn merge(&mut self, other: &Histogram) -> Result<()> {
        if other.bins() != self.bins() || other.xmax != self.xmax {
            return Err(Error::InvalidGrid("histograms have different binning".into()));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.overflow += other.overflow;
        self.total += other.total;
        Ok(())
    }

    /// `bin_left,bin_right,density` rows plus a final overflow row with `bin_right=inf`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_left,bin_right,density\n");
        let w = self.width();
        for (i, d) in self.density().iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", i as f64 * w, (i + 1) as f64 * w, d);
        }
        let _ = writeln!(out, "{},inf,{}", self.xmax, self.overflow_mass());
        out
    }
}

impl IntervalTable {
    /// Histogram of the rescaled lengths `count · I_i`.
    pub fn density_histogram(&self, bins: usize, xmax: f64) -> Result<Histogram> {
        let mut h = Histogram::new(bins, xmax)?;
        let n = self.count() as f64;
        for l in self.sorted_lengths() {
            h.add(n * l);
        }
        Ok(h)
    }

    /// Histogram of split-point coordinates on `[0, 1)`.
    pub fn position_histogram(&self, bins: usize) -> Result<Histogram> {
        let points = self.split_points()?;
        let mut h = Histogram::new(bins, 1.0)?;
        for &p in points {
            h.add(p);
        }
        Ok(h)
    }
}
