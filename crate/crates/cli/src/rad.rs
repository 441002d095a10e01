//! Rademacher probe on tiny synthetic classes: the feasible lower estimate
//! next to the analytic upper and lower bounds.

use std::path::Path;

use snnbound::bounds::{rad_lower, rad_upper_frob, rad_upper_path};
use snnbound::linalg::{l2_norm, row_l2_norms};
use snnbound::measures::{class_report, MeasureOptions};
use snnbound::model::init_kaiming;
use snnbound::rademacher::mc_rad_estimate;
use snnbound::{BoundInputs, Matrix, SeededRng};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};

pub const RAD_HEADER: [&str; 12] = [
    "n",
    "d",
    "m",
    "c",
    "R_W",
    "R_V",
    "estimate",
    "std_error",
    "upper_bound_path",
    "upper_bound_frob",
    "lower_bound",
    "margin",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RadRow {
    pub n: usize,
    pub d: usize,
    pub m: usize,
    pub c: usize,
    pub r_w: f64,
    pub r_v: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub upper_path: f64,
    pub upper_frob: f64,
    /// Only defined for c = 1, ReLU.
    pub lower: Option<f64>,
}

impl RadRow {
    /// Distance from the estimate to the path-norm upper bound.
    pub fn margin(&self) -> f64 {
        self.upper_path - self.estimate
    }
}

/// `d × n` data with unit-norm columns.
pub fn probe_data(d: usize, n: usize, rng: &mut SeededRng) -> Matrix {
    let mut x = Matrix::from_fn(d, n, |_, _| rng.normal());
    for j in 0..n {
        let norm = l2_norm(&x.column(j)).max(f64::MIN_POSITIVE);
        for i in 0..d {
            x.set(i, j, x.get(i, j) / norm);
        }
    }
    x
}

pub fn run_probe(cfg: &ExperimentConfig) -> Result<Vec<RadRow>> {
    let r = &cfg.rad;
    let seed = r.estimator.seed;
    let x = probe_data(r.d, r.n, &mut SeededRng::new(seed));
    let mut rows = Vec::new();
    for &m in &r.widths {
        let (params, _) = init_kaiming(&mut SeededRng::derive(seed, m as u64), m, r.d, r.c, cfg.activation)?;
        let w0 = params.w;
        let r0 = row_l2_norms(&w0).into_iter().fold(f64::INFINITY, f64::min);
        for &offset in &r.rw_offsets {
            for &r_v in &r.rv {
                let r_w = r0 + offset;
                let est = mc_rad_estimate(&x, &w0, r_w, r_v, cfg.activation, r.c, &r.estimator)?;
                let report = class_report(&x, &w0, r_w, r_v, cfg.activation, r.c, &MeasureOptions::default())?;
                let inputs = BoundInputs::new(report, cfg.delta)?;
                rows.push(RadRow {
                    n: r.n,
                    d: r.d,
                    m,
                    c: r.c,
                    r_w,
                    r_v,
                    estimate: est.mean,
                    std_error: est.std_error,
                    upper_path: rad_upper_path(&inputs)?,
                    upper_frob: rad_upper_frob(&inputs)?,
                    lower: rad_lower(&inputs).ok(),
                });
            }
        }
    }
    Ok(rows)
}

pub fn write_rad(path: &Path, rows: &[RadRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(CliError::csv(path))?;
    w.write_record(RAD_HEADER).map_err(CliError::csv(path))?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            r.d.to_string(),
            r.m.to_string(),
            r.c.to_string(),
            r.r_w.to_string(),
            r.r_v.to_string(),
            r.estimate.to_string(),
            r.std_error.to_string(),
            r.upper_path.to_string(),
            r.upper_frob.to_string(),
            r.lower.map(|v| v.to_string()).unwrap_or_default(),
            r.margin().to_string(),
        ])
        .map_err(CliError::csv(path))?;
    }
    w.flush().map_err(CliError::io(path))
}
