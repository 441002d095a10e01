//! Rademacher complexity bounds, the explicit path-norm generalization bound,
//! the standard path-norm bound and the comparator bounds from the literature.

use std::f64::consts::SQRT_2;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::measures::MeasureReport;
use crate::model::Activation;

/// Where the `2√2 → 2` reduction for binary outputs is applied in
/// [`gen_bound_pn`]. Ignored unless `c = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BinaryReduction {
    /// Both Rademacher-derived terms use the factor 2.
    #[default]
    BothTerms,
    /// Only the initialization term uses 2; the path-norm term keeps 2√2.
    FirstTermOnly,
    /// Keep 2√2 everywhere.
    Off,
}

impl FromStr for BinaryReduction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "both" => Ok(BinaryReduction::BothTerms),
            "first" => Ok(BinaryReduction::FirstTermOnly),
            "off" => Ok(BinaryReduction::Off),
            _ => Err(Error::invalid(format!("unknown reduction mode {s:?}"))),
        }
    }
}

impl fmt::Display for BinaryReduction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BinaryReduction::BothTerms => "both",
            BinaryReduction::FirstTermOnly => "first",
            BinaryReduction::Off => "off",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundInputs {
    pub report: MeasureReport,
    /// Lipschitz constant of the loss.
    pub g: f64,
    /// Range of the loss.
    pub b: f64,
    pub delta: f64,
    /// Class-level supremum of κ; `None` means `√c · R_W · R_V`.
    pub sup_kappa: Option<f64>,
    pub reduction: BinaryReduction,
}

impl BoundInputs {
    /// Ramp-loss defaults: `G = 1`, `b = 1`.
    pub fn new(report: MeasureReport, delta: f64) -> Result<Self> {
        let inputs = BoundInputs {
            report,
            g: 1.0,
            b: 1.0,
            delta,
            sup_kappa: None,
            reduction: BinaryReduction::default(),
        };
        inputs.validate()?;
        Ok(inputs)
    }

    pub fn validate(&self) -> Result<()> {
        let r = &self.report;
        if r.n == 0 || r.m == 0 || r.c == 0 || r.d == 0 {
            return Err(Error::invalid("n, m, c and d must be positive"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::invalid(format!("delta {} outside (0, 1)", self.delta)));
        }
        if !(self.g > 0.0 && self.b > 0.0 && r.g_act > 0.0) {
            return Err(Error::invalid("G, G_γ and b must be positive"));
        }
        if let Some(s) = self.sup_kappa {
            if !(s >= 0.0) {
                return Err(Error::invalid(format!("sup_kappa {s} must be nonnegative")));
            }
        }
        Ok(())
    }

    pub fn sup_kappa(&self) -> f64 {
        let r = &self.report;
        self.sup_kappa
            .unwrap_or_else(|| (r.c as f64).sqrt() * r.r_w * r.r_v)
    }
}

/// `⌈log₂ x⌉`, clamped below at 1.
fn ceil_log2_clamped(x: f64) -> f64 {
    x.log2().ceil().max(1.0)
}

/// `2√2 (1 + 1/(2 log 2mc)) · log^{1/2}(2mc · K)`.
fn peeling_constant(m: usize, c: usize, k: f64) -> f64 {
    let two_mc = 2.0 * (m * c) as f64;
    2.0 * SQRT_2 * (1.0 + 1.0 / (2.0 * two_mc.ln())) * (two_mc * k).ln().sqrt()
}

/// `c_m = 2√2 (1 + 1/(2 log 2mc)) log^{1/2}(2mc ⌈log₂(2 R_W R_V √(cm) / sup κ)⌉)`.
pub fn cm_constant(m: usize, c: usize, r_w: f64, r_v: f64, sup_kappa: f64) -> Result<f64> {
    if !(sup_kappa > 0.0) {
        return Err(Error::invalid(format!("sup_kappa must be positive, got {sup_kappa}")));
    }
    if m == 0 || c == 0 {
        return Err(Error::invalid("m and c must be positive"));
    }
    let ratio = 2.0 * r_w * r_v * ((c * m) as f64).sqrt() / sup_kappa;
    Ok(peeling_constant(m, c, ceil_log2_clamped(ratio)))
}

/// Union-bound constant with the `max{2 r1 r2 √(cm)/κ_cap, 2√m}` argument.
/// With `kappa_cap = 1` this is the constant `c_{r1,r2}` of the explicit bound.
pub fn cm_prime_constant(m: usize, c: usize, r1: f64, r2: f64, kappa_cap: f64) -> Result<f64> {
    if !(r1 >= 1.0 && r2 >= 1.0) {
        return Err(Error::invalid(format!("r1, r2 must be at least 1, got {r1}, {r2}")));
    }
    if !(kappa_cap > 0.0) {
        return Err(Error::invalid(format!("kappa_cap must be positive, got {kappa_cap}")));
    }
    if m == 0 || c == 0 {
        return Err(Error::invalid("m and c must be positive"));
    }
    let a = 2.0 * r1 * r2 * ((c * m) as f64).sqrt() / kappa_cap;
    let b = 2.0 * (m as f64).sqrt();
    Ok(peeling_constant(m, c, ceil_log2_clamped(a.max(b))))
}

/// `(2+√5)/n · ‖X‖_F + c · ‖X‖_σ / n`.
fn data_factor(r: &MeasureReport, constant: f64) -> f64 {
    let n = r.n as f64;
    (2.0 + 5f64.sqrt()) / n * r.x_fro + constant * r.gram_spec_sqrt / n
}

fn upper_with_kappa(inputs: &BoundInputs, sup_kappa: f64) -> Result<f64> {
    let r = &inputs.report;
    let first = r.r_v / r.n as f64 * r.init_term;
    if sup_kappa == 0.0 {
        return Ok(first);
    }
    let cm = cm_constant(r.m, r.c, r.r_w, r.r_v, sup_kappa)?;
    Ok(first + r.g_act * sup_kappa * data_factor(r, cm))
}

/// Upper bound on the empirical Rademacher complexity in terms of the class
/// supremum of the path-norm.
pub fn rad_upper_path(inputs: &BoundInputs) -> Result<f64> {
    upper_with_kappa(inputs, inputs.sup_kappa())
}

/// [`rad_upper_path`] with the supremum replaced by `√c R_W R_V`.
pub fn rad_upper_frob(inputs: &BoundInputs) -> Result<f64> {
    let r = &inputs.report;
    upper_with_kappa(inputs, (r.c as f64).sqrt() * r.r_w * r.r_v)
}

fn lower_terms(r: &MeasureReport, dist: f64) -> f64 {
    let n = r.n as f64;
    // init_term carries a factor √c, and c = 1 here
    dist * r.r_v / (4.0 * SQRT_2 * n) * r.x_fro + r.r_v / (2.0 * SQRT_2 * n) * r.init_term
}

fn lower_preconditions(r: &MeasureReport) -> Result<()> {
    if r.c != 1 {
        return Err(Error::Precondition(format!("lower bound needs c = 1, got {}", r.c)));
    }
    if r.activation != Activation::Relu {
        return Err(Error::Precondition(format!(
            "lower bound needs ReLU, got {}",
            r.activation
        )));
    }
    Ok(())
}

/// Lower bound on the empirical Rademacher complexity (c = 1, ReLU,
/// `R_W ≥ r0`).
pub fn rad_lower(inputs: &BoundInputs) -> Result<f64> {
    let r = &inputs.report;
    lower_preconditions(r)?;
    if r.r_w < r.r0 {
        return Err(Error::Precondition(format!(
            "R_W = {} is below r0 = {}",
            r.r_w, r.r0
        )));
    }
    Ok(lower_terms(r, r.r_w - r.r0))
}

/// [`rad_lower`] with `R_W − r0` replaced by `max(R_W − r0, 0)`, which keeps
/// only the initialization term when `R_W < r0`.
pub fn rad_lower_clamped(inputs: &BoundInputs) -> Result<f64> {
    let r = &inputs.report;
    lower_preconditions(r)?;
    Ok(lower_terms(r, (r.r_w - r.r0).max(0.0)))
}

/// The three terms of the explicit path-norm generalization bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenBoundTerms {
    pub init: f64,
    pub path: f64,
    pub confidence: f64,
}

impl GenBoundTerms {
    pub fn total(&self) -> f64 {
        self.init + self.path + self.confidence
    }
}

/// Explicit generalization bound in terms of `κ`, `‖V‖_F` and `‖W − W0‖_F`,
/// holding uniformly over all networks with probability `1 − δ`.
pub fn gen_bound_pn_terms(inputs: &BoundInputs) -> Result<GenBoundTerms> {
    inputs.validate()?;
    let r = &inputs.report;
    let n = r.n as f64;
    let full = 2.0 * SQRT_2;
    let (k1, k2) = match (r.c, inputs.reduction) {
        (1, BinaryReduction::BothTerms) => (2.0, 2.0),
        (1, BinaryReduction::FirstTermOnly) => (2.0, full),
        _ => (full, full),
    };
    let r1 = r.r_w + 1.0;
    let r2 = r.r_v + 1.0;
    let cr = cm_prime_constant(r.m, r.c, r1, r2, 1.0)?;
    let init = k1 * inputs.g * r2 / n * r.init_term;
    let path = k2 * inputs.g * r.g_act * (r.kappa + 1.0) * data_factor(r, cr);
    let log_arg = 2.0 * r1 * (r1 + 1.0) * r2 * (r2 + 1.0) * (r.kappa + 1.0) * (r.kappa + 2.0)
        / inputs.delta;
    let confidence = 3.0 * inputs.b * (log_arg.ln() / (2.0 * n)).sqrt();
    Ok(GenBoundTerms {
        init,
        path,
        confidence,
    })
}

pub fn gen_bound_pn(inputs: &BoundInputs) -> Result<f64> {
    gen_bound_pn_terms(inputs).map(|t| t.total())
}

/// Generalization bound in terms of the standard path-norm (c = 1).
pub fn gen_bound_spn(inputs: &BoundInputs) -> Result<f64> {
    inputs.validate()?;
    let r = &inputs.report;
    let ks = r
        .kappa_s
        .ok_or_else(|| Error::invalid("missing measure kappa_s (requires c = 1)"))?;
    let n = r.n as f64;
    Ok(4.0 / n * (ks + 1.0) * r.x_fro
        + 3.0 * ((2.0 * (ks + 1.0) * (ks + 2.0) / inputs.delta).ln() / (2.0 * n)).sqrt())
}

/// Dominant term of the explicit bound in the comparison-table convention:
/// `‖V‖_F (Σⱼ Σᵢ γ²(xᵢᵀwⱼ⁰))^{1/2} / n + κ ‖X‖_F / n`.
pub fn ours_dominant_term(report: &MeasureReport) -> f64 {
    let n = report.n as f64;
    report.r_v * report.init_term / ((report.c as f64).sqrt() * n) + report.kappa * report.x_fro / n
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    VcDim,
    Inf1Product,
    SpnRadbound,
    FroProduct,
    Spectral12,
    Pacbayes,
    ReluDecomp,
    LipschitzSmooth,
    Adl,
    PnOurs,
    SpnOurs,
    RadUpperPath,
    RadUpperFrob,
    RadLower,
}

impl Method {
    pub const ALL: [Method; 14] = [
        Method::VcDim,
        Method::Inf1Product,
        Method::SpnRadbound,
        Method::FroProduct,
        Method::Spectral12,
        Method::Pacbayes,
        Method::ReluDecomp,
        Method::LipschitzSmooth,
        Method::Adl,
        Method::PnOurs,
        Method::SpnOurs,
        Method::RadUpperPath,
        Method::RadUpperFrob,
        Method::RadLower,
    ];

    /// The nine comparator rows, in table order.
    pub const COMPARATORS: [Method; 9] = [
        Method::VcDim,
        Method::Inf1Product,
        Method::SpnRadbound,
        Method::FroProduct,
        Method::Spectral12,
        Method::Pacbayes,
        Method::ReluDecomp,
        Method::LipschitzSmooth,
        Method::Adl,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Method::VcDim => "vc_dim",
            Method::Inf1Product => "inf1_product",
            Method::SpnRadbound => "spn_radbound",
            Method::FroProduct => "fro_product",
            Method::Spectral12 => "spectral_12",
            Method::Pacbayes => "pacbayes",
            Method::ReluDecomp => "relu_decomp",
            Method::LipschitzSmooth => "lipschitz_smooth",
            Method::Adl => "adl",
            Method::PnOurs => "pn_ours",
            Method::SpnOurs => "spn_ours",
            Method::RadUpperPath => "rad_upper_path",
            Method::RadUpperFrob => "rad_upper_frob",
            Method::RadLower => "rad_lower",
        }
    }

    /// Row number in the comparison table (1–10), if any.
    pub fn table_row(self) -> Option<usize> {
        Method::COMPARATORS
            .iter()
            .position(|&m| m == self)
            .map(|i| i + 1)
            .or((self == Method::PnOurs).then_some(10))
    }

    pub fn data_dependent(self) -> bool {
        !matches!(
            self,
            Method::VcDim
                | Method::SpnRadbound
                | Method::Pacbayes
                | Method::LipschitzSmooth
                | Method::Adl
        )
    }

    pub fn qualitative(self) -> bool {
        self == Method::Adl
    }

    /// Complete generalization bounds (as opposed to Rademacher bounds).
    pub fn is_generalization_bound(self) -> bool {
        !matches!(
            self,
            Method::RadUpperPath | Method::RadUpperFrob | Method::RadLower
        )
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.id() == s)
            .ok_or_else(|| Error::invalid(format!("unknown method {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundValue {
    pub method: Method,
    pub value: f64,
    pub delta: f64,
    pub data_dependent: bool,
    pub qualitative: bool,
}

impl BoundValue {
    fn new(method: Method, value: f64, delta: f64) -> Result<Self> {
        if !(value >= 0.0 && value.is_finite()) {
            return Err(Error::Internal(format!("{method} evaluated to {value}")));
        }
        Ok(BoundValue {
            method,
            value,
            delta,
            data_dependent: method.data_dependent(),
            qualitative: method.qualitative(),
        })
    }
}

fn require(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(Error::invalid(format!("missing or invalid measure {name} = {v}")))
    }
}

/// Dominant term of comparator row 1–9, scaled by `‖X‖_F/n` for data-dependent
/// rows and by `b_x/√n` for the others.
pub fn comparator_bound(row: usize, inputs: &BoundInputs) -> Result<BoundValue> {
    let method = *row
        .checked_sub(1)
        .and_then(|i| Method::COMPARATORS.get(i))
        .ok_or_else(|| Error::invalid(format!("comparator row {row} outside 1..=9")))?;
    let r = &inputs.report;
    let n = r.n as f64;
    let (m, d) = (r.m as f64, r.d as f64);
    let dep = require("X_fro", r.x_fro)? / n;
    let indep = require("b_x", r.b_x)? / n.sqrt();
    let value = match method {
        Method::VcDim => (d * m).sqrt() * indep,
        Method::Inf1Product => require("w_inf1", r.w_inf1)? * require("v_inf1", r.v_inf1)? * dep,
        Method::SpnRadbound => {
            let ks = r.kappa_s.ok_or_else(|| Error::invalid("missing measure kappa_s"))?;
            require("kappa_s", ks)? * indep
        }
        Method::FroProduct => require("w_fro", r.w_fro)? * r.r_v * dep,
        Method::Spectral12 => {
            (require("w_spectral", r.w_spectral)? * require("v_dist_12", r.v_dist_12)?
                + require("w_dist_12", r.w_dist_12)? * require("v_spectral", r.v_spectral)?)
                * dep
        }
        Method::Pacbayes => {
            (r.w_spectral * require("v_dist", r.v_dist)? + m.sqrt() * r.r_w * r.v_spectral) * indep
        }
        Method::ReluDecomp => {
            (require("w0_spectral", r.w0_spectral)? * r.r_v + r.r_w * r.r_v + m.sqrt()) * dep
        }
        Method::LipschitzSmooth => {
            if r.b_x == 0.0 {
                return Err(Error::invalid("b_x = 0 makes the smooth-activation row undefined"));
            }
            (1.0 / r.b_x + r.r_v * (r.w0_spectral + r.r_w * (1.0 + r.w0_spectral * r.b_x)))
                * indep
        }
        Method::Adl => (r.w0_spectral * r.r_v + r.r_w * r.r_v) * indep,
        _ => unreachable!(),
    };
    BoundValue::new(method, value, inputs.delta)
}

/// One value per applicable method, in [`Method::ALL`] order. Methods whose
/// preconditions fail (standard path-norm for `c ≠ 1`, the lower bound outside
/// ReLU/c = 1) are omitted. The lower bound uses [`rad_lower_clamped`].
pub fn all_bounds(inputs: &BoundInputs) -> Result<Vec<BoundValue>> {
    inputs.validate()?;
    let mut out = Vec::with_capacity(Method::ALL.len());
    let delta = inputs.delta;
    for row in 1..=9 {
        match comparator_bound(row, inputs) {
            Ok(v) => out.push(v),
            Err(Error::InvalidArgument(_)) if inputs.report.kappa_s.is_none() && row == 3 => {}
            Err(e) => return Err(e),
        }
    }
    out.push(BoundValue::new(Method::PnOurs, gen_bound_pn(inputs)?, delta)?);
    if inputs.report.kappa_s.is_some() {
        out.push(BoundValue::new(Method::SpnOurs, gen_bound_spn(inputs)?, delta)?);
    }
    out.push(BoundValue::new(Method::RadUpperPath, rad_upper_path(inputs)?, delta)?);
    out.push(BoundValue::new(Method::RadUpperFrob, rad_upper_frob(inputs)?, delta)?);
    if lower_preconditions(&inputs.report).is_ok() {
        out.push(BoundValue::new(Method::RadLower, rad_lower_clamped(inputs)?, delta)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn report() -> MeasureReport {
        MeasureReport {
            n: 100,
            d: 16,
            m: 64,
            c: 1,
            activation: Activation::Relu,
            g_act: 1.0,
            kappa: 1.5,
            kappa_s: Some(9.0),
            r_w: 2.0,
            r_v: 1.2,
            v_dist: 0.8,
            w_fro: 11.0,
            w0_spectral: 2.5,
            w_spectral: 3.0,
            v_spectral: 1.2,
            w_dist_12: 7.0,
            v_dist_12: 3.1,
            w_inf1: 40.0,
            v_inf1: 6.0,
            init_term: 30.0,
            x_fro: 10.0,
            gram_spec_sqrt: 4.0,
            b_x: 1.0,
            r0: 1.1,
            spectral_converged: true,
        }
    }

    fn inputs() -> BoundInputs {
        BoundInputs::new(report(), 0.01).unwrap()
    }

    #[test]
    fn cm_default_sup_simplifies() {
        for m in [4usize, 64] {
            let (rw, rv) = (1.3, 0.7);
            let got = cm_constant(m, 1, rw, rv, rw * rv).unwrap();
            let mf = m as f64;
            let k = (2.0 * mf.sqrt()).log2().ceil();
            let expect = 2.0 * 2f64.sqrt()
                * (1.0 + 1.0 / (2.0 * (2.0 * mf).ln()))
                * (2.0 * mf * k).ln().sqrt();
            assert!((got - expect).abs() < 1e-12);
        }
        assert!(cm_constant(64, 1, 1.0, 1.0, 1.0).unwrap() <= cm_constant(4096, 1, 1.0, 1.0, 1.0).unwrap());
        assert!(cm_constant(64, 1, 2.0, 1.0, 1.0).unwrap() >= cm_constant(64, 1, 1.0, 1.0, 1.0).unwrap());
        assert!(cm_constant(4, 1, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn cm_ceiling_is_clamped() {
        // ratio below 2 would give ⌈log₂⌉ ≤ 0 without the clamp
        let v = cm_constant(1, 1, 1.0, 1.0, 100.0).unwrap();
        let expect = 2.0 * 2f64.sqrt() * (1.0 + 1.0 / (2.0 * 2f64.ln())) * 2f64.ln().sqrt();
        assert!((v - expect).abs() < 1e-12);
    }

    #[test]
    fn cm_prime_examples() {
        let m = 16usize;
        let a = cm_prime_constant(m, 1, 1.0, 1.0, 1.0).unwrap();
        let k = (2.0 * 4.0f64).log2().ceil();
        let expect = 2.0 * 2f64.sqrt() * (1.0 + 1.0 / (2.0 * 32f64.ln())) * (32.0 * k).ln().sqrt();
        assert!((a - expect).abs() < 1e-12);
        // m=16, r1=r2=2: argument max{32, 8} = 32, ⌈log₂ 32⌉ = 5, so log(32·5)
        let b = cm_prime_constant(16, 1, 2.0, 2.0, 1.0).unwrap();
        let direct = 2.0 * 2f64.sqrt() * (1.0 + 1.0 / (10.0 * 2f64.ln())) * 160f64.ln().sqrt();
        assert!((b - direct).abs() < 1e-12);
        // 40-digit reference value
        assert!((b - 7.291196076218877888759332465200133).abs() < 1e-12);
        assert!(cm_prime_constant(16, 1, 0.5, 1.0, 1.0).is_err());
    }

    #[test]
    fn frob_equals_path_at_default_sup() {
        let i = inputs();
        assert_eq!(rad_upper_path(&i).unwrap(), rad_upper_frob(&i).unwrap());
        let mut smaller = i.clone();
        smaller.sup_kappa = Some(0.5 * i.sup_kappa());
        assert!(rad_upper_frob(&i).unwrap() >= rad_upper_path(&smaller).unwrap());
    }

    #[test]
    fn upper_scales_linearly_with_data_when_init_is_zero() {
        let mut r = report();
        r.init_term = 0.0;
        let base = BoundInputs::new(r.clone(), 0.01).unwrap();
        r.x_fro *= 2.0;
        r.gram_spec_sqrt *= 2.0;
        let scaled = BoundInputs::new(r, 0.01).unwrap();
        let (a, b) = (rad_upper_path(&base).unwrap(), rad_upper_path(&scaled).unwrap());
        assert!((b - 2.0 * a).abs() < 1e-12 * a);
    }

    #[test]
    fn upper_vanishes_with_zero_norms() {
        let mut r = report();
        r.init_term = 0.0;
        r.r_v = 1e-12;
        let i = BoundInputs::new(r, 0.01).unwrap();
        assert!(rad_upper_path(&i).unwrap() < 1e-9);
    }

    #[test]
    fn lower_examples() {
        let mut r = report();
        r.r0 = 0.0;
        r.init_term = 0.0;
        let i = BoundInputs::new(r.clone(), 0.01).unwrap();
        let expect = r.r_w * r.r_v * r.x_fro / (4.0 * 2f64.sqrt() * r.n as f64);
        assert!((rad_lower(&i).unwrap() - expect).abs() < 1e-15);

        let mut r = report();
        r.r_w = r.r0;
        let i = BoundInputs::new(r.clone(), 0.01).unwrap();
        let only_init = r.r_v / (2.0 * 2f64.sqrt() * r.n as f64) * r.init_term;
        assert!((rad_lower(&i).unwrap() - only_init).abs() < 1e-15);

        let mut r = report();
        r.r_w = 0.5 * r.r0;
        let i = BoundInputs::new(r, 0.01).unwrap();
        assert!(matches!(rad_lower(&i), Err(Error::Precondition(_))));
        assert!((rad_lower_clamped(&i).unwrap() - only_init).abs() < 1e-15);

        let mut r = report();
        r.activation = Activation::Tanh;
        assert!(rad_lower(&BoundInputs::new(r, 0.01).unwrap()).is_err());
    }

    #[test]
    fn gen_pn_zero_norm_terms() {
        let mut r = report();
        r.kappa = 0.0;
        r.r_w = 0.0;
        r.r_v = 0.0;
        let i = BoundInputs::new(r.clone(), 0.05).unwrap();
        let t = gen_bound_pn_terms(&i).unwrap();
        let conf = 3.0 * ((16.0f64 / 0.05).ln() / (2.0 * r.n as f64)).sqrt();
        assert!((t.confidence - conf).abs() < 1e-15);
        // the (‖V‖_F + 1) and (κ + 1) factors keep the other terms positive
        assert!((t.init - 2.0 / r.n as f64 * r.init_term).abs() < 1e-15);
        assert!(t.path > 0.0);
    }

    #[test]
    fn gen_pn_reduction_modes() {
        let mut i = inputs();
        let both = gen_bound_pn_terms(&i).unwrap();
        i.reduction = BinaryReduction::FirstTermOnly;
        let first = gen_bound_pn_terms(&i).unwrap();
        i.reduction = BinaryReduction::Off;
        let off = gen_bound_pn_terms(&i).unwrap();
        assert_eq!(both.init, first.init);
        assert!((first.path / both.path - 2f64.sqrt()).abs() < 1e-12);
        assert!((off.init / both.init - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(off.path, first.path);
    }

    #[test]
    fn gen_pn_decreases_with_n() {
        let a = gen_bound_pn(&inputs()).unwrap();
        let mut r = report();
        r.n *= 2;
        let b = gen_bound_pn(&BoundInputs::new(r, 0.01).unwrap()).unwrap();
        assert!(b < a);
    }

    #[test]
    fn gen_spn_examples() {
        let mut r = report();
        r.kappa_s = Some(0.0);
        r.x_fro = (r.n as f64).sqrt();
        let i = BoundInputs::new(r.clone(), 0.01).unwrap();
        let n = r.n as f64;
        let expect = 4.0 / n.sqrt() + 3.0 * ((4.0f64 / 0.01).ln() / (2.0 * n)).sqrt();
        assert!((gen_bound_spn(&i).unwrap() - expect).abs() < 1e-14);
        r.kappa_s = None;
        assert!(gen_bound_spn(&BoundInputs::new(r, 0.01).unwrap()).is_err());
    }

    #[test]
    fn comparator_rows_recomputed() {
        let i = inputs();
        let r = report();
        let n = r.n as f64;
        let dep = r.x_fro / n;
        let ind = r.b_x / n.sqrt();
        let expect = [
            (16.0f64 * 64.0).sqrt() * ind,
            40.0 * 6.0 * dep,
            9.0 * ind,
            11.0 * 1.2 * dep,
            (3.0 * 3.1 + 7.0 * 1.2) * dep,
            (3.0 * 0.8 + 8.0 * 2.0 * 1.2) * ind,
            (2.5 * 1.2 + 2.0 * 1.2 + 8.0) * dep,
            (1.0 + 1.2 * (2.5 + 2.0 * (1.0 + 2.5))) * ind,
            (2.5 * 1.2 + 2.0 * 1.2) * ind,
        ];
        for (row, e) in (1..=9).zip(expect) {
            let v = comparator_bound(row, &i).unwrap();
            assert!((v.value - e).abs() < 1e-12 * e, "row {row}");
            assert_eq!(v.method.table_row(), Some(row));
            assert_eq!(v.qualitative, row == 9);
        }
        assert!(comparator_bound(0, &i).is_err());
        assert!(comparator_bound(10, &i).is_err());
        let mut bad = report();
        bad.w_inf1 = f64::NAN;
        let err = comparator_bound(2, &BoundInputs { report: bad, ..i }).unwrap_err();
        assert!(err.to_string().contains("w_inf1"));
    }

    #[test]
    fn dominant_term_example() {
        let r = report();
        let expect = 1.2 * 30.0 / 100.0 + 1.5 * 10.0 / 100.0;
        assert!((ours_dominant_term(&r) - expect).abs() < 1e-15);
    }

    #[test]
    fn all_bounds_cover_every_method() {
        let v = all_bounds(&inputs()).unwrap();
        let ids: Vec<_> = v.iter().map(|b| b.method).collect();
        assert_eq!(ids, Method::ALL.to_vec());
        for m in Method::ALL {
            assert_eq!(m.id().parse::<Method>().unwrap(), m);
        }
    }

    #[test]
    fn input_validation() {
        assert!(BoundInputs::new(report(), 0.0).is_err());
        assert!(BoundInputs::new(report(), 1.0).is_err());
    }

    proptest! {
        #[test]
        fn gen_pn_monotone(dk in 0.0f64..3.0, dw in 0.0f64..3.0, dv in 0.0f64..3.0, dd in 0.001f64..0.5) {
            let base = inputs();
            let b0 = gen_bound_pn(&base).unwrap();
            let mut r = report();
            r.kappa += dk;
            r.r_w += dw;
            r.r_v += dv;
            let bigger = BoundInputs::new(r, 0.01).unwrap();
            prop_assert!(gen_bound_pn(&bigger).unwrap() >= b0);
            let tighter = BoundInputs::new(report(), 0.01 * dd).unwrap();
            prop_assert!(gen_bound_pn(&tighter).unwrap() >= b0);
            let mut r = report();
            r.kappa += 1.0;
            prop_assert!(gen_bound_pn(&BoundInputs::new(r, 0.01).unwrap()).unwrap() > b0);
        }

        #[test]
        fn spn_monotone(ks in 0.0f64..50.0) {
            let mut r = report();
            r.kappa_s = Some(ks);
            let a = gen_bound_spn(&BoundInputs::new(r.clone(), 0.01).unwrap()).unwrap();
            r.kappa_s = Some(2.0 * ks + 0.1);
            prop_assert!(gen_bound_spn(&BoundInputs::new(r, 0.01).unwrap()).unwrap() > a);
        }
    }
}
