//! Complexity measures of a trained network relative to its initialization.

use crate::datasets::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{
    frobenius_norm, l2_norm, pairwise_sum, pq_norm, row_l2_norms, spectral_norm, Matrix,
    NormIndex, SeededRng, DEFAULT_SPECTRAL_MAX_ITER, DEFAULT_SPECTRAL_TOL,
};
use crate::model::{Activation, InitSnapshot, SnnParams};

/// Columns of `X` per block when forming `W0 X`.
const CHUNK: usize = 1024;

/// `κ = Σ_j Σ_k |v_kj| · ‖w_j − w_j⁰‖₂`.
pub fn path_norm(params: &SnnParams, snapshot: &InitSnapshot) -> Result<f64> {
    if !snapshot.matches(params) {
        return Err(Error::shape(
            "path_norm",
            format!("{}x{}", params.m(), params.d()),
            format!("{}x{}", snapshot.w0().rows(), snapshot.w0().cols()),
        ));
    }
    let dist = row_l2_norms(&params.w.sub(snapshot.w0())?);
    Ok(weighted_column_sum(&params.v, &dist))
}

/// `Σ_j (Σ_k |v_kj|) · r_j`.
fn weighted_column_sum(v: &Matrix, r: &[f64]) -> f64 {
    let terms: Vec<f64> = (0..v.cols())
        .map(|j| (0..v.rows()).map(|k| v.get(k, j).abs()).sum::<f64>() * r[j])
        .collect();
    pairwise_sum(&terms)
}

/// `κ_s = Σ_j |v_j| · ‖w_j‖₂` (c = 1).
pub fn standard_path_norm(params: &SnnParams) -> Result<f64> {
    if params.c() != 1 {
        return Err(Error::Unsupported(format!(
            "standard path-norm is defined for c = 1, got c = {}",
            params.c()
        )));
    }
    Ok(weighted_column_sum(&params.v, &row_l2_norms(&params.w)))
}

/// `Σ_j Σ_i γ²(x_iᵀ w_j⁰)` with `X` stored `d × n`.
pub fn init_activation_sum(w0: &Matrix, x: &Matrix, activation: Activation) -> Result<f64> {
    if w0.cols() != x.rows() {
        return Err(Error::shape("init_activation_sum", w0.cols(), x.rows()));
    }
    let mut partial = Vec::new();
    let n = x.cols();
    let mut start = 0;
    while start < n {
        let end = (start + CHUNK).min(n);
        let idx: Vec<usize> = (start..end).collect();
        let z = w0.matmul(&x.select_columns(&idx))?;
        let sq: Vec<f64> = z.data().iter().map(|&a| activation.eval(a).powi(2)).collect();
        partial.push(pairwise_sum(&sq));
        start = end;
    }
    Ok(pairwise_sum(&partial))
}

/// `(c · Σ_j Σ_i γ²(x_iᵀ w_j⁰))^{1/2}`.
pub fn init_activation_term(
    snapshot: &InitSnapshot,
    ds: &Dataset,
    activation: Activation,
    c: usize,
) -> Result<f64> {
    Ok((c as f64 * init_activation_sum(snapshot.w0(), ds.x(), activation)?).sqrt())
}

/// Settings for the power iterations inside [`measure_report`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureOptions {
    pub spectral_tol: f64,
    pub spectral_max_iter: usize,
    pub seed: u64,
}

impl Default for MeasureOptions {
    fn default() -> Self {
        MeasureOptions {
            spectral_tol: DEFAULT_SPECTRAL_TOL,
            spectral_max_iter: DEFAULT_SPECTRAL_MAX_ITER,
            seed: 0x5eed,
        }
    }
}

/// Every scalar the bounds need, plus the shape information that lets the
/// bounds and figures be recomputed from a CSV row alone.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureReport {
    pub n: usize,
    pub d: usize,
    pub m: usize,
    pub c: usize,
    pub activation: Activation,
    /// Lipschitz constant of the activation.
    pub g_act: f64,
    pub kappa: f64,
    /// `None` when `c ≠ 1`.
    pub kappa_s: Option<f64>,
    /// `‖W − W0‖_F`
    pub r_w: f64,
    /// `‖V‖_F`
    pub r_v: f64,
    /// `‖V − V0‖_F`
    pub v_dist: f64,
    /// `‖W‖_F`
    pub w_fro: f64,
    pub w0_spectral: f64,
    pub w_spectral: f64,
    pub v_spectral: f64,
    /// `‖W − W0‖_{1,2}`
    pub w_dist_12: f64,
    /// `‖V − V0‖_{1,2}`
    pub v_dist_12: f64,
    pub w_inf1: f64,
    pub v_inf1: f64,
    pub init_term: f64,
    pub x_fro: f64,
    /// `‖Σ x_i x_iᵀ‖_σ^{1/2}`, i.e. the largest singular value of `X`.
    pub gram_spec_sqrt: f64,
    pub b_x: f64,
    /// `min_j ‖w_j⁰‖₂`
    pub r0: f64,
    /// False if any power iteration hit its iteration cap.
    pub spectral_converged: bool,
}

pub fn measure_report(
    params: &SnnParams,
    snapshot: &InitSnapshot,
    ds: &Dataset,
) -> Result<MeasureReport> {
    measure_report_with(params, snapshot, ds, &MeasureOptions::default())
}

pub fn measure_report_with(
    params: &SnnParams,
    snapshot: &InitSnapshot,
    ds: &Dataset,
    opts: &MeasureOptions,
) -> Result<MeasureReport> {
    if ds.d() != params.d() {
        return Err(Error::shape("measure_report", params.d(), ds.d()));
    }
    let kappa = path_norm(params, snapshot)?;
    let kappa_s = (params.c() == 1)
        .then(|| standard_path_norm(params))
        .transpose()?;
    let w_diff = params.w.sub(snapshot.w0())?;
    let v_diff = params.v.sub(snapshot.v0())?;

    let mut converged = true;
    let mut spec = |m: &Matrix, stream: u64| -> Result<f64> {
        let mut rng = SeededRng::derive(opts.seed, stream);
        let e = spectral_norm(m, opts.spectral_tol, opts.spectral_max_iter, &mut rng)?;
        converged &= e.converged;
        Ok(e.value)
    };
    let w0_spectral = spec(snapshot.w0(), 0)?;
    let w_spectral = spec(&params.w, 1)?;
    let v_spectral = spec(&params.v, 2)?;
    let gram_spec_sqrt = spec(ds.x(), 3)?;

    let col_norms: Vec<f64> = (0..ds.n()).map(|i| l2_norm(&ds.x().column(i))).collect();
    let b_x = col_norms.iter().fold(0.0f64, |a, &b| a.max(b));
    let r0 = row_l2_norms(snapshot.w0())
        .into_iter()
        .fold(f64::INFINITY, f64::min);

    Ok(MeasureReport {
        n: ds.n(),
        d: params.d(),
        m: params.m(),
        c: params.c(),
        activation: params.activation,
        g_act: params.activation.lipschitz(),
        kappa,
        kappa_s,
        r_w: frobenius_norm(&w_diff),
        r_v: frobenius_norm(&params.v),
        v_dist: frobenius_norm(&v_diff),
        w_fro: frobenius_norm(&params.w),
        w0_spectral,
        w_spectral,
        v_spectral,
        w_dist_12: pq_norm(&w_diff, NormIndex::One, NormIndex::Two),
        v_dist_12: pq_norm(&v_diff, NormIndex::One, NormIndex::Two),
        w_inf1: pq_norm(&params.w, NormIndex::Inf, NormIndex::One),
        v_inf1: pq_norm(&params.v, NormIndex::Inf, NormIndex::One),
        init_term: init_activation_term(snapshot, ds, params.activation, params.c())?,
        x_fro: frobenius_norm(ds.x()),
        gram_spec_sqrt,
        b_x,
        r0,
        spectral_converged: converged,
    })
}

/// Report for the class `{‖W − W0‖_F ≤ R_W, ‖V‖_F ≤ R_V}` on the sample `X`
/// (`d × n`), as needed by the Rademacher bounds. `kappa` is set to its class
/// supremum `√c R_W R_V`; fields that only exist for a trained network are NaN
/// and `kappa_s` is `None`.
pub fn class_report(
    x: &Matrix,
    w0: &Matrix,
    r_w: f64,
    r_v: f64,
    activation: Activation,
    c: usize,
    opts: &MeasureOptions,
) -> Result<MeasureReport> {
    if w0.cols() != x.rows() {
        return Err(Error::shape("class_report", w0.cols(), x.rows()));
    }
    if !(r_w >= 0.0 && r_v >= 0.0) || c == 0 {
        return Err(Error::invalid("radii must be nonnegative and c positive"));
    }
    let spec = |m: &Matrix, stream: u64| -> Result<(f64, bool)> {
        let mut rng = SeededRng::derive(opts.seed, stream);
        let e = spectral_norm(m, opts.spectral_tol, opts.spectral_max_iter, &mut rng)?;
        Ok((e.value, e.converged))
    };
    let (w0_spectral, c0) = spec(w0, 0)?;
    let (gram_spec_sqrt, c1) = spec(x, 3)?;
    let b_x = (0..x.cols())
        .map(|i| l2_norm(&x.column(i)))
        .fold(0.0f64, f64::max);
    Ok(MeasureReport {
        n: x.cols(),
        d: x.rows(),
        m: w0.rows(),
        c,
        activation,
        g_act: activation.lipschitz(),
        kappa: (c as f64).sqrt() * r_w * r_v,
        kappa_s: None,
        r_w,
        r_v,
        v_dist: f64::NAN,
        w_fro: f64::NAN,
        w0_spectral,
        w_spectral: f64::NAN,
        v_spectral: f64::NAN,
        w_dist_12: f64::NAN,
        v_dist_12: f64::NAN,
        w_inf1: f64::NAN,
        v_inf1: f64::NAN,
        init_term: (c as f64 * init_activation_sum(w0, x, activation)?).sqrt(),
        x_fro: frobenius_norm(x),
        gram_spec_sqrt,
        b_x,
        r0: row_l2_norms(w0).into_iter().fold(f64::INFINITY, f64::min),
        spectral_converged: c0 && c1,
    })
}

/// Column order of a measures CSV row after the `dataset,seed,m` key.
pub const MEASURE_COLUMNS: [&str; 23] = [
    "kappa",
    "kappa_s",
    "R_W",
    "R_V",
    "v_dist",
    "w0_spectral",
    "w_spectral",
    "v_spectral",
    "w_dist_12",
    "v_dist_12",
    "w_inf1",
    "v_inf1",
    "init_term",
    "X_fro",
    "gram_spec_sqrt",
    "b_x",
    "n",
    "d",
    "c",
    "g_act",
    "w_fro",
    "r0",
    "activation",
];

impl MeasureReport {
    /// Values in [`MEASURE_COLUMNS`] order. Floats use the shortest
    /// representation that parses back to the same bits.
    pub fn csv_fields(&self) -> Vec<String> {
        let f = |x: f64| format!("{x}");
        vec![
            f(self.kappa),
            self.kappa_s.map(f).unwrap_or_default(),
            f(self.r_w),
            f(self.r_v),
            f(self.v_dist),
            f(self.w0_spectral),
            f(self.w_spectral),
            f(self.v_spectral),
            f(self.w_dist_12),
            f(self.v_dist_12),
            f(self.w_inf1),
            f(self.v_inf1),
            f(self.init_term),
            f(self.x_fro),
            f(self.gram_spec_sqrt),
            f(self.b_x),
            self.n.to_string(),
            self.d.to_string(),
            self.c.to_string(),
            f(self.g_act),
            f(self.w_fro),
            f(self.r0),
            self.activation.to_string(),
        ]
    }

    /// Inverse of [`MeasureReport::csv_fields`] given `m` from the row key.
    pub fn from_csv_fields(m: usize, fields: &[&str]) -> Result<Self> {
        if fields.len() != MEASURE_COLUMNS.len() {
            return Err(Error::Data(format!(
                "measures row has {} fields, expected {}",
                fields.len(),
                MEASURE_COLUMNS.len()
            )));
        }
        let num = |i: usize| -> Result<f64> {
            fields[i].trim().parse::<f64>().map_err(|_| {
                Error::Data(format!("bad value {:?} for {}", fields[i], MEASURE_COLUMNS[i]))
            })
        };
        let int = |i: usize| -> Result<usize> {
            fields[i].trim().parse::<usize>().map_err(|_| {
                Error::Data(format!("bad value {:?} for {}", fields[i], MEASURE_COLUMNS[i]))
            })
        };
        Ok(MeasureReport {
            kappa: num(0)?,
            kappa_s: if fields[1].trim().is_empty() {
                None
            } else {
                Some(num(1)?)
            },
            r_w: num(2)?,
            r_v: num(3)?,
            v_dist: num(4)?,
            w0_spectral: num(5)?,
            w_spectral: num(6)?,
            v_spectral: num(7)?,
            w_dist_12: num(8)?,
            v_dist_12: num(9)?,
            w_inf1: num(10)?,
            v_inf1: num(11)?,
            init_term: num(12)?,
            x_fro: num(13)?,
            gram_spec_sqrt: num(14)?,
            b_x: num(15)?,
            n: int(16)?,
            d: int(17)?,
            c: int(18)?,
            g_act: num(19)?,
            w_fro: num(20)?,
            r0: num(21)?,
            activation: fields[22].trim().parse()?,
            m,
            spectral_converged: true,
        })
    }
}
