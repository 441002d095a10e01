//! Numerical probes of the empirical Rademacher complexity on tiny instances.
//!
//! Suprema over the constrained class are approached from below by projected
//! gradient ascent, so every estimate here is attained by a feasible network.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{frobenius_norm, l2_norm, pairwise_sum, sample_signs, Matrix, SeededRng};
use crate::model::Activation;

/// Largest `n · m · d` accepted by [`mc_rad_estimate`] unless overridden.
pub const DEFAULT_SCALE_GUARD: usize = 100_000;
/// Sign enumeration is used instead of sampling up to this many samples.
pub const MAX_EXHAUSTIVE_N: usize = 10;

const STEP_DECAY: f64 = 0.99;
const FEASIBILITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct RadConfig {
    pub sigma_samples: usize,
    pub pga_steps: usize,
    pub pga_restarts: usize,
    /// Initial step as a fraction of `R_W`; decays by 0.99 per step.
    pub step_size: f64,
    pub seed: u64,
    /// Enumerate all sign vectors when `n ≤ 10` and `c = 1`.
    pub exhaustive: bool,
    /// Upper limit on `n · m · d`; `None` disables the guard.
    pub scale_guard: Option<usize>,
}

impl Default for RadConfig {
    fn default() -> Self {
        RadConfig {
            sigma_samples: 200,
            pga_steps: 200,
            pga_restarts: 5,
            step_size: 0.05,
            seed: 0,
            exhaustive: true,
            scale_guard: Some(DEFAULT_SCALE_GUARD),
        }
    }
}

impl RadConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sigma_samples == 0 || self.pga_steps == 0 || self.pga_restarts == 0 {
            return Err(Error::invalid("sigma_samples, pga_steps and pga_restarts must be ≥ 1"));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::invalid(format!("step_size {} must be positive", self.step_size)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateKind {
    /// Average of values attained by feasible networks.
    FeasibleLower,
    /// Exact per-σ suprema.
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
    pub kind: EstimateKind,
    /// Every sign vector was enumerated, so there is no sampling error.
    pub exhaustive: bool,
}

/// Euclidean projection onto `{M : ‖M − center‖_F ≤ radius}`.
pub fn project_fro_ball(m: &Matrix, center: &Matrix, radius: f64) -> Result<Matrix> {
    if !(radius >= 0.0) {
        return Err(Error::invalid(format!("radius {radius} must be nonnegative")));
    }
    let diff = m.sub(center)?;
    let dist = frobenius_norm(&diff);
    if dist <= radius {
        return Ok(m.clone());
    }
    let mut out = center.clone();
    out.axpy(radius / dist, &diff)?;
    Ok(out)
}

fn check_sigma_len(sigma: &[f64], n: usize) -> Result<()> {
    if sigma.len() != n {
        return Err(Error::shape("rademacher", format!("{n} signs"), sigma.len()));
    }
    Ok(())
}

/// `sup_{‖w‖₂ ≤ R} Σ σᵢ wᵀxᵢ = R ‖Σ σᵢ xᵢ‖₂` for `X` of shape `d × n`.
pub fn closed_form_linear_sup(sigma: &[f64], x: &Matrix, radius: f64) -> Result<f64> {
    check_sigma_len(sigma, x.cols())?;
    Ok(radius * l2_norm(&x.matvec(sigma)))
}

/// `sup_{‖v‖₂ ≤ R_V} Σᵢ σᵢ Σⱼ vⱼ γ(xᵢᵀwⱼ⁰) = R_V ‖Σᵢ σᵢ Mᵢ‖₂` with
/// `Mᵢ = γ(W0 xᵢ)`.
pub fn closed_form_toplayer_sup(
    sigma: &[f64],
    x: &Matrix,
    w0: &Matrix,
    r_v: f64,
    activation: Activation,
) -> Result<f64> {
    check_sigma_len(sigma, x.cols())?;
    let h = w0.matmul(x)?.map(|a| activation.eval(a));
    Ok(r_v * l2_norm(&h.matvec(sigma)))
}

/// `Σᵢₖ σᵢₖ [V γ(W xᵢ)]ₖ = ⟨V, (H Σ)ᵀ⟩` where `H = γ(W X)`.
fn objective(w: &Matrix, v: &Matrix, x: &Matrix, sigma: &Matrix, act: Activation) -> Result<f64> {
    let hs = w.matmul(x)?.map(|a| act.eval(a)).matmul(sigma)?;
    let (m, c) = hs.shape();
    let terms: Vec<f64> = (0..c)
        .flat_map(|k| (0..m).map(move |j| (k, j)))
        .map(|(k, j)| v.get(k, j) * hs.get(j, k))
        .collect();
    Ok(pairwise_sum(&terms))
}

/// Exact maximizer of the objective over `‖V‖_F ≤ R_V` for fixed `W`. When the
/// linear functional vanishes any feasible `V` is optimal; a random one is
/// returned so that the `W` gradient does not get stuck at zero.
fn best_top_layer(
    w: &Matrix,
    x: &Matrix,
    sigma: &Matrix,
    r_v: f64,
    act: Activation,
    rng: &mut SeededRng,
) -> Result<Matrix> {
    let hs = w.matmul(x)?.map(|a| act.eval(a)).matmul(sigma)?;
    let dir = hs.transpose();
    let norm = frobenius_norm(&dir);
    if norm > 0.0 {
        return Ok(dir.scale(r_v / norm));
    }
    let rand = Matrix::from_fn(dir.rows(), dir.cols(), |_, _| rng.normal());
    let rn = frobenius_norm(&rand);
    Ok(if rn > 0.0 { rand.scale(r_v / rn) } else { rand })
}

/// Gradient of the objective with respect to `W`:
/// `((Vᵀ Σᵀ) ∘ γ'(W X)) Xᵀ`.
fn grad_w(w: &Matrix, v: &Matrix, x: &Matrix, sigma: &Matrix, act: Activation) -> Result<Matrix> {
    let pre = w.matmul(x)?;
    let mut back = v.t_matmul(&sigma.transpose())?;
    for (b, a) in back.data_mut().iter_mut().zip(pre.data()) {
        *b *= act.derivative(*a);
    }
    back.matmul_t(x)
}

fn random_start(w0: &Matrix, r_w: f64, rng: &mut SeededRng) -> Result<Matrix> {
    let dir = Matrix::from_fn(w0.rows(), w0.cols(), |_, _| rng.normal());
    let norm = frobenius_norm(&dir);
    let mut w = w0.clone();
    if norm > 0.0 {
        w.axpy(r_w * rng.uniform() / norm, &dir)?;
    }
    Ok(w)
}

#[allow(clippy::too_many_arguments)]
fn pga_with_seed(
    sigma: &Matrix,
    x: &Matrix,
    w0: &Matrix,
    r_w: f64,
    r_v: f64,
    act: Activation,
    cfg: &RadConfig,
    seed: u64,
) -> Result<f64> {
    let mut best: Option<(f64, Matrix, Matrix)> = None;
    for restart in 0..cfg.pga_restarts {
        let mut rng = SeededRng::derive(seed, restart as u64);
        let mut w = if restart == 0 {
            w0.clone()
        } else {
            random_start(w0, r_w, &mut rng)?
        };
        let mut v = best_top_layer(&w, x, sigma, r_v, act, &mut rng)?;
        let mut local = (objective(&w, &v, x, sigma, act)?, w.clone(), v.clone());
        let mut step = r_w * cfg.step_size;
        for _ in 0..cfg.pga_steps {
            if step == 0.0 {
                break;
            }
            let g = grad_w(&w, &v, x, sigma, act)?;
            let gn = frobenius_norm(&g);
            if !(gn > 0.0 && gn.is_finite()) {
                break;
            }
            w.axpy(step / gn, &g)?;
            w = project_fro_ball(&w, w0, r_w)?;
            v = best_top_layer(&w, x, sigma, r_v, act, &mut rng)?;
            let val = objective(&w, &v, x, sigma, act)?;
            if val > local.0 {
                local = (val, w.clone(), v.clone());
            }
            step *= STEP_DECAY;
        }
        if best.as_ref().is_none_or(|b| local.0 > b.0) {
            best = Some(local);
        }
    }
    let (value, w, v) = best.expect("at least one restart");
    let dw = frobenius_norm(&w.sub(w0)?);
    let dv = frobenius_norm(&v);
    if dw > r_w * (1.0 + FEASIBILITY_TOL) + FEASIBILITY_TOL
        || dv > r_v * (1.0 + FEASIBILITY_TOL) + FEASIBILITY_TOL
    {
        return Err(Error::Internal(format!(
            "ascent left the feasible set: ‖W−W0‖_F = {dw} > {r_w} or ‖V‖_F = {dv} > {r_v}"
        )));
    }
    let check = objective(&w, &v, x, sigma, act)?;
    if check != value {
        return Err(Error::Internal(format!("objective drifted: {value} vs {check}")));
    }
    Ok(value)
}

fn check_class(sigma: &Matrix, x: &Matrix, w0: &Matrix, r_w: f64, r_v: f64) -> Result<()> {
    if sigma.rows() != x.cols() || sigma.cols() == 0 {
        return Err(Error::shape(
            "pga_sup_estimate",
            format!("sign matrix {} × c with c ≥ 1", x.cols()),
            format!("{} × {}", sigma.rows(), sigma.cols()),
        ));
    }
    if w0.cols() != x.rows() {
        return Err(Error::shape("pga_sup_estimate", format!("W0 with {} columns", x.rows()), w0.cols()));
    }
    if !(r_w >= 0.0 && r_v >= 0.0) {
        return Err(Error::invalid(format!("radii must be nonnegative, got {r_w}, {r_v}")));
    }
    Ok(())
}

/// Best value of `Σᵢₖ σᵢₖ [Ψ_{W,V}(xᵢ)]ₖ` found by projected gradient ascent
/// over `{‖W − W0‖_F ≤ R_W, ‖V‖_F ≤ R_V}`. The returned value is attained by
/// a verified-feasible pair, so it never exceeds the true supremum.
pub fn pga_sup_estimate(
    sigma: &Matrix,
    x: &Matrix,
    w0: &Matrix,
    r_w: f64,
    r_v: f64,
    activation: Activation,
    cfg: &RadConfig,
) -> Result<f64> {
    cfg.validate()?;
    check_class(sigma, x, w0, r_w, r_v)?;
    pga_with_seed(sigma, x, w0, r_w, r_v, activation, cfg, cfg.seed)
}

fn sign_pattern(bits: u64, n: usize) -> Matrix {
    Matrix::from_fn(n, 1, |i, _| if bits >> i & 1 == 1 { -1.0 } else { 1.0 })
}

fn summarize(values: &[f64], kind: EstimateKind, exhaustive: bool) -> RadEstimate {
    let k = values.len();
    let mean = pairwise_sum(values) / k as f64;
    let std_error = if exhaustive || k < 2 {
        0.0
    } else {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
        (var / k as f64).sqrt()
    };
    RadEstimate {
        mean,
        std_error,
        samples: k,
        kind,
        exhaustive,
    }
}

/// Evaluates `f` for every sign matrix (exhaustively for `n ≤ 10`, `c = 1`
/// when allowed, otherwise `samples` draws), in parallel with an ordered
/// reduction. Returns per-σ values and whether enumeration was used.
fn over_signs<F>(n: usize, c: usize, samples: usize, exhaustive: bool, seed: u64, f: F) -> Result<(Vec<f64>, bool)>
where
    F: Fn(&Matrix, u64) -> Result<f64> + Sync,
{
    let enumerate = exhaustive && c == 1 && n <= MAX_EXHAUSTIVE_N;
    let count = if enumerate { 1usize << n } else { samples };
    let values = (0..count as u64)
        .into_par_iter()
        .map(|k| {
            let task_seed = SeededRng::derive(seed, k).seed();
            let sigma = if enumerate {
                sign_pattern(k, n)
            } else {
                sample_signs(&mut SeededRng::new(task_seed), n, c)
            };
            f(&sigma, task_seed)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok((values, enumerate))
}

/// Monte-Carlo (or exhaustive) estimate of
/// `(1/n) E_σ sup Σᵢₖ σᵢₖ [Ψ(xᵢ)]ₖ` over the constrained class.
#[allow(clippy::too_many_arguments)]
pub fn mc_rad_estimate(
    x: &Matrix,
    w0: &Matrix,
    r_w: f64,
    r_v: f64,
    activation: Activation,
    c: usize,
    cfg: &RadConfig,
) -> Result<RadEstimate> {
    cfg.validate()?;
    let (d, n) = x.shape();
    let m = w0.rows();
    if n == 0 || c == 0 || m == 0 {
        return Err(Error::invalid("n, m and c must be positive"));
    }
    if let Some(limit) = cfg.scale_guard {
        let scale = n.saturating_mul(m).saturating_mul(d);
        if scale > limit {
            return Err(Error::invalid(format!(
                "n·m·d = {scale} exceeds the guard {limit}; raise or disable the guard"
            )));
        }
    }
    check_class(&Matrix::zeros(n, c), x, w0, r_w, r_v)?;
    let (values, enumerated) = over_signs(n, c, cfg.sigma_samples, cfg.exhaustive, cfg.seed, |sigma, seed| {
        pga_with_seed(sigma, x, w0, r_w, r_v, activation, cfg, seed).map(|v| v / n as f64)
    })?;
    Ok(summarize(&values, EstimateKind::FeasibleLower, enumerated))
}

/// `(1/n) E_σ R ‖Σ σᵢ xᵢ‖₂`, the exact Rademacher complexity of the linear
/// class `{x ↦ wᵀx : ‖w‖₂ ≤ R}`, estimated with exact per-σ suprema.
pub fn linear_rad_closed_form(x: &Matrix, radius: f64, cfg: &RadConfig) -> Result<RadEstimate> {
    cfg.validate()?;
    let n = x.cols();
    if n == 0 {
        return Err(Error::invalid("empty sample"));
    }
    let (values, enumerated) = over_signs(n, 1, cfg.sigma_samples, cfg.exhaustive, cfg.seed, |sigma, _| {
        closed_form_linear_sup(sigma.data(), x, radius).map(|v| v / n as f64)
    })?;
    Ok(summarize(&values, EstimateKind::ClosedForm, enumerated))
}

/// Sampled `E_σ ‖Σ σᵢ xᵢ‖₂` together with the endpoints
/// `2^{-1/2} (Σ‖xᵢ‖²)^{1/2}` and `(Σ‖xᵢ‖²)^{1/2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KhintchineCheck {
    pub mc_mean: f64,
    pub std_error: f64,
    pub lower: f64,
    pub upper: f64,
}

impl KhintchineCheck {
    pub fn holds(&self) -> bool {
        // relative slack absorbs rounding when every draw hits an endpoint
        let slack = 3.0 * self.std_error + 1e-12 * self.upper;
        self.lower - slack <= self.mc_mean && self.mc_mean <= self.upper + slack
    }
}

/// Checks the Khintchine–Kahane sandwich on the columns of `X`. Fails with a
/// precondition error when the sampled mean leaves the band by more than three
/// standard errors.
pub fn khintchine_sandwich_check(x: &Matrix, samples: usize, rng: &mut SeededRng) -> Result<KhintchineCheck> {
    if samples < 100 {
        return Err(Error::invalid(format!("need at least 100 samples, got {samples}")));
    }
    let n = x.cols();
    let values: Vec<f64> = (0..samples)
        .map(|_| {
            let sigma: Vec<f64> = (0..n).map(|_| rng.sign()).collect();
            l2_norm(&x.matvec(&sigma))
        })
        .collect();
    let est = summarize(&values, EstimateKind::ClosedForm, false);
    let upper = frobenius_norm(x);
    let check = KhintchineCheck {
        mc_mean: est.mean,
        std_error: est.std_error,
        lower: upper / std::f64::consts::SQRT_2,
        upper,
    };
    if !check.holds() {
        return Err(Error::Precondition(format!(
            "sampled mean {} outside [{}, {}] ± 3·{}",
            check.mc_mean, check.lower, check.upper, check.std_error
        )));
    }
    Ok(check)
}
