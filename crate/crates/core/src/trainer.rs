//! Mini-batch SGD with classical momentum on binary cross-entropy with logits,
//! plus the 0–1 error and ramp risk used by the stopping rule and the bounds.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::datasets::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{Matrix, SeededRng};
use crate::model::{sigmoid, InitSnapshot, SnnParams};

/// Examples per forward chunk when evaluating on a whole dataset.
const EVAL_CHUNK: usize = 1024;

/// Quantity compared against `target_train_error` at the end of each epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StopRule {
    #[default]
    ZeroOneError,
    MeanLoss,
}

impl fmt::Display for StopRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopRule::ZeroOneError => "zero_one",
            StopRule::MeanLoss => "mean_loss",
        })
    }
}

impl FromStr for StopRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero_one" => Ok(StopRule::ZeroOneError),
            "mean_loss" => Ok(StopRule::MeanLoss),
            _ => Err(Error::invalid(format!("unknown stop rule {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub momentum: f64,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub target_train_error: f64,
    pub stop_rule: StopRule,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 256,
            momentum: 0.9,
            learning_rate: 0.001,
            max_epochs: 20,
            target_train_error: 0.1,
            stop_rule: StopRule::ZeroOneError,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn mnist(seed: u64) -> Self {
        TrainConfig {
            seed,
            ..Default::default()
        }
    }

    pub fn cifar(seed: u64) -> Self {
        TrainConfig {
            max_epochs: 50,
            seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::invalid(format!("momentum {} outside [0, 1)", self.momentum)));
        }
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::invalid(format!(
                "learning rate {} must be finite and nonnegative",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub epochs_run: usize,
    /// Mean training loss over each epoch's batches, weighted by batch size.
    pub loss_curve: Vec<f64>,
    /// Full-training-set 0–1 error at the end of each epoch.
    pub error_curve: Vec<f64>,
    pub final_train_error: f64,
    pub final_ramp_risk: f64,
    pub wall_time: Duration,
}

/// Equality ignores `wall_time`.
impl PartialEq for TrainReport {
    fn eq(&self, other: &Self) -> bool {
        self.epochs_run == other.epochs_run
            && bits_eq(&self.loss_curve, &other.loss_curve)
            && bits_eq(&self.error_curve, &other.error_curve)
            && self.final_train_error.to_bits() == other.final_train_error.to_bits()
            && self.final_ramp_risk.to_bits() == other.final_ramp_risk.to_bits()
    }
}

fn bits_eq(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

/// Stable BCE-with-logits for label `y01 ∈ {0, 1}`: returns the loss and its
/// derivative with respect to the score.
#[inline]
pub fn bce_logits(score: f64, y01: f64) -> (f64, f64) {
    let loss = score.max(0.0) - score * y01 + (-score.abs()).exp().ln_1p();
    (loss, sigmoid(score) - y01)
}

#[inline]
fn to01(y: f64) -> f64 {
    if y > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Gradients of the mean BCE loss over a batch.
#[derive(Debug, Clone)]
pub struct BatchGradient {
    pub loss: f64,
    pub grad_w: Matrix,
    pub grad_v: Matrix,
}

/// Mean loss and gradients on a batch given as rows (`B × d`) with ±1 labels.
pub fn batch_gradient(params: &SnnParams, xb: &Matrix, yb: &[f64]) -> Result<BatchGradient> {
    if params.c() != 1 {
        return Err(Error::Unsupported("training requires c = 1".into()));
    }
    let b = xb.rows();
    if b != yb.len() || xb.cols() != params.d() {
        return Err(Error::shape("batch_gradient", format!("{b} rows of width {}", params.d()), format!("{} rows of width {}", yb.len(), xb.cols())));
    }
    let act = params.activation;
    let z = params.w.matmul_t(xb)?; // m × B
    let h = z.map(|a| act.eval(a));
    let v = params.v.row(0);
    let m = params.m();
    let inv_b = 1.0 / b as f64;

    let mut scores = vec![0.0; b];
    for (j, &vj) in v.iter().enumerate() {
        for (s, hj) in scores.iter_mut().zip(h.row(j)) {
            *s += vj * hj;
        }
    }
    let mut loss = 0.0;
    let mut gs = vec![0.0; b];
    for i in 0..b {
        let (l, g) = bce_logits(scores[i], to01(yb[i]));
        loss += l;
        gs[i] = g * inv_b;
    }
    loss *= inv_b;

    let grad_v = Matrix::from_vec_unchecked(1, m, h.matvec(&gs));
    // dL/dZ = (vᵀ gs) ⊙ γ'(Z)
    let mut gz = z;
    for j in 0..m {
        let vj = v[j];
        for (g, &s) in gz.row_mut(j).iter_mut().zip(&gs) {
            *g = vj * s * act.derivative(*g);
        }
    }
    let grad_w = gz.matmul(xb)?;
    Ok(BatchGradient {
        loss,
        grad_w,
        grad_v,
    })
}

/// Mean BCE loss over a set of rows (`B × d`).
pub fn batch_loss(params: &SnnParams, xb: &Matrix, yb: &[f64]) -> Result<f64> {
    let s = scores_rows(params, xb)?;
    Ok(s.iter()
        .zip(yb)
        .map(|(&s, &y)| bce_logits(s, to01(y)).0)
        .sum::<f64>()
        / yb.len() as f64)
}

fn scores_rows(params: &SnnParams, xb: &Matrix) -> Result<Vec<f64>> {
    let act = params.activation;
    let h = params.w.matmul_t(xb)?.map(|a| act.eval(a));
    Ok(h.t_matvec(params.v.row(0)))
}

/// Network outputs `Ψ(x_i)` for every example (c = 1), evaluated in chunks.
pub fn outputs(params: &SnnParams, ds: &Dataset) -> Result<Vec<f64>> {
    if params.c() != 1 {
        return Err(Error::Unsupported("scalar outputs require c = 1".into()));
    }
    if ds.d() != params.d() {
        return Err(Error::shape("outputs", params.d(), ds.d()));
    }
    let n = ds.n();
    let mut out = Vec::with_capacity(n);
    let mut start = 0;
    while start < n {
        let end = (start + EVAL_CHUNK).min(n);
        let idx: Vec<usize> = (start..end).collect();
        let xc = ds.x().select_columns(&idx);
        let h = params.hidden(&xc)?;
        out.extend(h.t_matvec(params.v.row(0)));
        start = end;
    }
    Ok(out)
}

/// Fraction of examples with `sign(Ψ(x_i)) ≠ y_i`; an output of exactly zero
/// counts as an error.
pub fn zero_one_error(params: &SnnParams, ds: &Dataset) -> Result<f64> {
    let s = outputs(params, ds)?;
    Ok(zero_one_from_outputs(&s, ds.y()))
}

pub fn zero_one_from_outputs(scores: &[f64], y: &[f64]) -> f64 {
    let wrong = scores.iter().zip(y).filter(|(&s, &y)| s * y <= 0.0).count();
    wrong as f64 / y.len().max(1) as f64
}

/// The 1-Lipschitz ramp loss of the margin `t = yΨ`.
#[inline]
pub fn ramp(t: f64) -> f64 {
    if t > 1.0 {
        0.0
    } else if t < 0.0 {
        1.0
    } else {
        1.0 - t
    }
}

pub fn ramp_risk(params: &SnnParams, ds: &Dataset) -> Result<f64> {
    let s = outputs(params, ds)?;
    Ok(ramp_from_outputs(&s, ds.y()))
}

pub fn ramp_from_outputs(scores: &[f64], y: &[f64]) -> f64 {
    scores.iter().zip(y).map(|(s, y)| ramp(s * y)).sum::<f64>() / y.len().max(1) as f64
}

/// Trains `params` in place. The snapshot is only read, to check shapes.
pub fn sgd_train(
    params: &mut SnnParams,
    snapshot: &InitSnapshot,
    ds: &Dataset,
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    cfg.validate()?;
    if params.c() != 1 {
        return Err(Error::Unsupported("training requires c = 1".into()));
    }
    if ds.d() != params.d() {
        return Err(Error::shape("sgd_train", params.d(), ds.d()));
    }
    if !snapshot.matches(params) {
        return Err(Error::invalid("snapshot shapes differ from params"));
    }
    let started = Instant::now();
    let n = ds.n();
    let xt = ds.x().transpose(); // n × d, one example per row
    let y = ds.y();
    let mut uw = Matrix::zeros(params.m(), params.d());
    let mut uv = Matrix::zeros(1, params.m());
    let mut loss_curve = Vec::new();
    let mut error_curve = Vec::new();
    let mut order: Vec<usize> = (0..n).collect();
    let mut final_error = f64::NAN;

    for epoch in 0..cfg.max_epochs {
        let mut rng = SeededRng::derive(cfg.seed, epoch as u64);
        order.sort_unstable();
        rng.shuffle(&mut order);
        let mut epoch_loss = 0.0;
        for (batch, idx) in order.chunks(cfg.batch_size).enumerate() {
            let xb = xt.select_rows(idx);
            let yb: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
            let g = batch_gradient(params, &xb, &yb)?;
            if !g.loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch });
            }
            epoch_loss += g.loss * idx.len() as f64;
            for (u, gw) in uw.data_mut().iter_mut().zip(g.grad_w.data()) {
                *u = cfg.momentum * *u + gw;
            }
            for (u, gv) in uv.data_mut().iter_mut().zip(g.grad_v.data()) {
                *u = cfg.momentum * *u + gv;
            }
            params.w.axpy(-cfg.learning_rate, &uw)?;
            params.v.axpy(-cfg.learning_rate, &uv)?;
            if !params.w.is_finite() || !params.v.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch });
            }
        }
        let mean_loss = epoch_loss / n as f64;
        loss_curve.push(mean_loss);
        final_error = zero_one_error(params, ds)?;
        error_curve.push(final_error);
        let monitored = match cfg.stop_rule {
            StopRule::ZeroOneError => final_error,
            StopRule::MeanLoss => mean_loss,
        };
        if monitored < cfg.target_train_error {
            break;
        }
    }
    if cfg.max_epochs == 0 {
        final_error = zero_one_error(params, ds)?;
    }
    Ok(TrainReport {
        epochs_run: loss_curve.len(),
        loss_curve,
        error_curve,
        final_train_error: final_error,
        final_ramp_risk: ramp_risk(params, ds)?,
        wall_time: started.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{init_kaiming, Activation};
    use crate::oracles::central_difference;
    use proptest::prelude::*;

    fn toy_dataset(n: usize, d: usize, seed: u64) -> Dataset {
        let mut r = SeededRng::new(seed);
        let mut cols = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let label = if i % 2 == 0 { 1.0 } else { -1.0 };
            let mut c: Vec<f64> = (0..d).map(|_| r.normal()).collect();
            c[0] += 2.0 * label;
            let nrm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
            cols.push(c.into_iter().map(|v| v / nrm).collect::<Vec<_>>());
            y.push(label);
        }
        let x = Matrix::from_fn(d, n, |i, j| cols[j][i]);
        Dataset::new(x, y, "toy").unwrap()
    }

    #[test]
    fn bce_examples() {
        let (l, g) = bce_logits(0.0, 1.0);
        assert!((l - 2f64.ln()).abs() < 1e-15);
        assert_eq!(g, -0.5);
        let (l, _) = bce_logits(50.0, 1.0);
        assert!((0.0..1e-20).contains(&l));
        let (l, g) = bce_logits(-800.0, 1.0);
        assert!((l - 800.0).abs() < 1e-9 && (g + 1.0).abs() < 1e-12);
        let mut r = SeededRng::new(2);
        for _ in 0..200 {
            let s = 4.0 * r.normal();
            let y = if r.sign() > 0.0 { 1.0 } else { 0.0 };
            let fd = central_difference(|t| bce_logits(t, y).0, s, 1e-5);
            let (_, g) = bce_logits(s, y);
            assert!((fd - g).abs() <= 1e-6 * g.abs().max(1e-3), "{s} {y}");
        }
    }

    #[test]
    fn ramp_examples() {
        let y = [1.0, -1.0];
        assert_eq!(ramp_from_outputs(&[2.0, -2.0], &y), 0.0);
        assert_eq!(ramp_from_outputs(&[-3.0, 3.0], &y), 1.0);
        assert_eq!(ramp_from_outputs(&[0.25], &[1.0]), 0.75);
    }

    #[test]
    fn zero_one_examples() {
        let ds = toy_dataset(6, 3, 1);
        let (mut p, _) = init_kaiming(&mut SeededRng::new(0), 4, 3, 1, Activation::Relu).unwrap();
        p.v = Matrix::zeros(1, 4);
        assert_eq!(zero_one_error(&p, &ds).unwrap(), 1.0);

        // two points separated along the first axis
        let x = Matrix::from_rows(&[&[1.0, -1.0], &[0.0, 0.0]]);
        let two = Dataset::new(x, vec![1.0, -1.0], "two").unwrap();
        let sep = SnnParams::new(
            Matrix::from_rows(&[&[1.0, 0.0], &[-1.0, 0.0]]),
            Matrix::from_rows(&[&[1.0, -1.0]]),
            Activation::Relu,
        )
        .unwrap();
        assert_eq!(zero_one_error(&sep, &two).unwrap(), 0.0);
    }

    #[test]
    fn zero_learning_rate_leaves_params() {
        let ds = toy_dataset(40, 5, 3);
        let (mut p, snap) = init_kaiming(&mut SeededRng::new(1), 8, 5, 1, Activation::Relu).unwrap();
        let before = p.clone();
        let cfg = TrainConfig {
            learning_rate: 0.0,
            max_epochs: 3,
            target_train_error: 0.0,
            batch_size: 7,
            ..Default::default()
        };
        let rep = sgd_train(&mut p, &snap, &ds, &cfg).unwrap();
        assert_eq!(p, before);
        assert_eq!(rep.epochs_run, 3);
    }

    #[test]
    fn full_batch_step_matches_hand_rolled_gd() {
        let ds = toy_dataset(10, 3, 4);
        let (mut p, snap) = init_kaiming(&mut SeededRng::new(2), 4, 3, 1, Activation::Tanh).unwrap();
        let start = p.clone();
        let lr = 0.3;
        let cfg = TrainConfig {
            learning_rate: lr,
            momentum: 0.0,
            batch_size: ds.n(),
            max_epochs: 1,
            target_train_error: 0.0,
            ..Default::default()
        };
        sgd_train(&mut p, &snap, &ds, &cfg).unwrap();

        // explicit loops over examples, neurons and inputs
        let (m, d, n) = (4, 3, ds.n());
        let mut gw = vec![vec![0.0; d]; m];
        let mut gv = vec![0.0; m];
        for i in 0..n {
            let x = ds.x().column(i);
            let z: Vec<f64> = (0..m)
                .map(|j| (0..d).map(|k| start.w.get(j, k) * x[k]).sum())
                .collect();
            let s: f64 = (0..m).map(|j| start.v.get(0, j) * z[j].tanh()).sum();
            let y01 = if ds.y()[i] > 0.0 { 1.0 } else { 0.0 };
            let ds_ = (1.0 / (1.0 + (-s).exp()) - y01) / n as f64;
            for j in 0..m {
                gv[j] += ds_ * z[j].tanh();
                let dz = ds_ * start.v.get(0, j) * (1.0 - z[j].tanh().powi(2));
                for k in 0..d {
                    gw[j][k] += dz * x[k];
                }
            }
        }
        for j in 0..m {
            assert!((p.v.get(0, j) - (start.v.get(0, j) - lr * gv[j])).abs() < 1e-12);
            for k in 0..d {
                assert!((p.w.get(j, k) - (start.w.get(j, k) - lr * gw[j][k])).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn training_is_deterministic_and_keeps_snapshot() {
        let ds = toy_dataset(64, 6, 5);
        let run = || {
            let (mut p, snap) =
                init_kaiming(&mut SeededRng::new(3), 16, 6, 1, Activation::Relu).unwrap();
            let digest = snap.digest();
            let cfg = TrainConfig {
                learning_rate: 0.05,
                batch_size: 10,
                max_epochs: 5,
                target_train_error: 0.0,
                seed: 11,
                ..Default::default()
            };
            let rep = sgd_train(&mut p, &snap, &ds, &cfg).unwrap();
            assert_eq!(snap.digest(), digest);
            (p, rep)
        };
        let (p1, r1) = run();
        let (p2, r2) = run();
        assert_eq!(p1, p2);
        assert_eq!(r1, r2);
        assert!(r1.loss_curve.iter().all(|l| l.is_finite()));
        assert!(r1.loss_curve.last() < r1.loss_curve.first());
    }

    #[test]
    fn stops_at_target() {
        let ds = toy_dataset(64, 4, 6);
        let (mut p, snap) = init_kaiming(&mut SeededRng::new(4), 32, 4, 1, Activation::Relu).unwrap();
        let cfg = TrainConfig {
            learning_rate: 0.1,
            batch_size: 8,
            max_epochs: 50,
            target_train_error: 0.2,
            ..Default::default()
        };
        let rep = sgd_train(&mut p, &snap, &ds, &cfg).unwrap();
        assert!(rep.epochs_run < 50);
        assert!(rep.final_train_error < 0.2);
        assert_eq!(rep.error_curve.len(), rep.epochs_run);
    }

    #[test]
    fn non_finite_loss_is_reported() {
        let ds = toy_dataset(8, 3, 7);
        let (mut p, snap) = init_kaiming(&mut SeededRng::new(5), 4, 3, 1, Activation::Identity).unwrap();
        let cfg = TrainConfig {
            learning_rate: 1e300,
            momentum: 0.0,
            batch_size: 2,
            max_epochs: 5,
            target_train_error: 0.0,
            ..Default::default()
        };
        let res = sgd_train(&mut p, &snap, &ds, &cfg);
        assert!(matches!(res, Err(Error::NonFiniteLoss { .. })), "{res:?}");
    }

    #[test]
    fn rejects_bad_config() {
        assert!(TrainConfig { batch_size: 0, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { momentum: 1.0, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { learning_rate: -1.0, ..Default::default() }.validate().is_err());
    }

    proptest! {
        #[test]
        fn ramp_is_one_lipschitz(a in -5.0f64..5.0, b in -5.0f64..5.0) {
            prop_assert!((ramp(a) - ramp(b)).abs() <= (a - b).abs() + 1e-15);
        }
    }
}
