//! Solution and trajectory files.
//!
//! A solution is `x,F,Fprime` with a JSON sidecar next to it (same stem,
//! `.json`) carrying the tail model and the solver report. Floats are written
//! in shortest round-trip form, so a reload is bit-exact.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::grid::{Grid, GridFunction, TailModel, Trajectory};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sidecar {
    pub tail_value: f64,
    pub tail: TailModel,
    pub q: f64,
    /// `Fprime` holds solver derivatives rather than differences.
    pub exact_slopes: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<serde_json::Value>,
}

pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

fn differences(f: &GridFunction) -> Vec<f64> {
    let (xs, v) = (f.xs(), f.values());
    let n = xs.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(1);
            let hi = (i + 1).min(n - 1);
            (v[hi] - v[lo]) / (xs[hi] - xs[lo])
        })
        .collect()
}

fn write_profile<W: std::io::Write>(f: &GridFunction, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["x", "F", "Fprime"]).map_err(csv_err)?;
    let d = f.slopes().map(<[f64]>::to_vec).unwrap_or_else(|| differences(f));
    for ((x, v), d) in f.xs().iter().zip(f.values()).zip(&d) {
        out.write_record([x.to_string(), v.to_string(), d.to_string()]).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

/// Writes `path` and its sidecar.
pub fn write_solution<R: Serialize>(path: &Path, f: &GridFunction, report: Option<&R>) -> Result<()> {
    write_profile(f, fs::File::create(path)?)?;
    let side = Sidecar {
        tail_value: f.tail_value(),
        tail: f.tail(),
        q: f.q(),
        exact_slopes: f.slopes().is_some(),
        report: report.map(serde_json::to_value).transpose()?,
    };
    fs::write(sidecar_path(path), serde_json::to_string_pretty(&side)?)?;
    Ok(())
}

/// Reads `x,F,Fprime`; without a sidecar the tail is taken as truncated at 1.
pub fn read_solution(path: &Path) -> Result<(GridFunction, Option<Sidecar>)> {
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.len() < 2 || &header[0] != "x" || &header[1] != "F" {
        return Err(Error::Parse(format!("{}: expected header x,F[,Fprime]", path.display())));
    }
    let (mut xs, mut vs, mut ds) = (Vec::new(), Vec::new(), Vec::new());
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let num = |k: usize| -> Result<f64> {
            rec.get(k)
                .ok_or_else(|| Error::Parse(format!("row {}: missing column {k}", line + 2)))?
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("row {}: {e}", line + 2)))
        };
        xs.push(num(0)?);
        vs.push(num(1)?);
        if header.len() > 2 {
            ds.push(num(2)?);
        }
    }
    let side_path = sidecar_path(path);
    let side: Option<Sidecar> =
        if side_path.exists() { Some(serde_json::from_str(&fs::read_to_string(side_path)?)?) } else { None };
    let grid = Grid::from_nodes(xs)?;
    let (tail_value, tail) = side.as_ref().map_or((1.0, TailModel::Truncated), |s| (s.tail_value, s.tail));
    let mut f = GridFunction::from_values(&grid, vs, tail_value, tail)?;
    if let Some(s) = &side {
        f = f.with_q(s.q);
        if s.exact_slopes && ds.len() == f.values().len() {
            f = f.with_slopes(ds)?;
        }
    }
    Ok((f, side))
}

/// One `frame_NNNNN.csv` per frame plus `index.csv` with `frame,t,file`.
pub fn write_trajectory(dir: &Path, traj: &Trajectory) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut index = csv::Writer::from_path(dir.join("index.csv")).map_err(csv_err)?;
    index.write_record(["frame", "t", "file"]).map_err(csv_err)?;
    for (k, (t, f)) in traj.times.iter().zip(&traj.frames).enumerate() {
        let name = format!("frame_{k:05}.csv");
        write_profile(f, fs::File::create(dir.join(&name))?)?;
        index.write_record([k.to_string(), t.to_string(), name]).map_err(csv_err)?;
    }
    index.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContractionRow {
    pub t: f64,
    pub d_candy: f64,
    /// `e^{−t} d_candy(0)`.
    pub bound: f64,
    pub ratio: f64,
}

pub fn write_contraction(path: &Path, rows: &[ContractionRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["t", "d_candy", "bound", "ratio"]).map_err(csv_err)?;
    for r in rows {
        w.write_record([r.t.to_string(), r.d_candy.to_string(), r.bound.to_string(), r.ratio.to_string()])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
