//! CSV and JSON emission. All numeric formatting goes through the shortest
//! round-trip float representation, so files are byte-stable across runs
//! and thread counts.

use anyhow::Context;
use serde::Serialize;
use spreadsim::estimators::EmpiricalCurve;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

pub const SURVIVAL_HEADER: &str = "x,analytic,empirical,band_low,band_high";
pub const MATRIX_HEADER: &str = "u,v,value";
pub const TABLE_HEADER: &str = "product,dependence,rho,mean,stderr,ci_low,ci_high";

pub fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Survival curve rows; the analytic column is left empty when the model
/// has no closed form.
pub fn survival_csv(xs: &[f64], analytic: Option<&[f64]>, curve: &EmpiricalCurve) -> String {
    let mut out = String::new();
    out.push_str(SURVIVAL_HEADER);
    out.push('\n');
    for (i, &x) in xs.iter().enumerate() {
        let a = match analytic {
            Some(v) => v[i].to_string(),
            None => String::new(),
        };
        let _ = writeln!(
            out,
            "{x},{a},{},{},{}",
            curve.values[i], curve.band_low[i], curve.band_high[i]
        );
    }
    out
}

/// Square matrix indexed by (i/g, j/g) in long form.
pub fn matrix_csv(values: &[Vec<f64>]) -> String {
    let g = values.len();
    let mut out = String::new();
    out.push_str(MATRIX_HEADER);
    out.push('\n');
    for (i, row) in values.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{v}",
                (i + 1) as f64 / g as f64,
                (j + 1) as f64 / g as f64
            );
        }
    }
    out
}

/// Surface sampled on explicit abscissae, in long form.
pub fn surface_csv(us: &[f64], vs: &[f64], values: &[Vec<f64>]) -> String {
    let mut out = String::new();
    out.push_str(MATRIX_HEADER);
    out.push('\n');
    for (i, &u) in us.iter().enumerate() {
        for (j, &v) in vs.iter().enumerate() {
            let _ = writeln!(out, "{u},{v},{}", values[i][j]);
        }
    }
    out
}

/// Trajectory bundle: one time column, one column per path.
pub fn trajectories_csv(times: &[f64], paths: &[Vec<f64>]) -> String {
    let mut out = String::from("t");
    for i in 0..paths.len() {
        let _ = write!(out, ",p{i:02}");
    }
    out.push('\n');
    for (k, &t) in times.iter().enumerate() {
        let _ = write!(out, "{t}");
        for p in paths {
            let _ = write!(out, ",{}", p[k]);
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct TableRow {
    pub product: String,
    pub dependence: String,
    pub rho: f64,
    pub mean: f64,
    pub stderr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

pub fn table_csv(rows: &[TableRow]) -> String {
    let mut out = String::new();
    out.push_str(TABLE_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.product, r.dependence, r.rho, r.mean, r.stderr, r.ci_low, r.ci_high
        );
    }
    out
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}
