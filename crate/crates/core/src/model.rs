//! The shallow network `Ψ(x) = V γ(W x)`, its initialization and checkpoints.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{Matrix, SeededRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Relu,
    Tanh,
    Sigmoid,
    /// `γ(a) = a`; turns the network into a linear model, used by tests that
    /// need closed-form suprema.
    Identity,
}

impl Activation {
    #[inline]
    pub fn eval(self, a: f64) -> f64 {
        match self {
            Activation::Relu => a.max(0.0),
            Activation::Tanh => a.tanh(),
            Activation::Sigmoid => sigmoid(a),
            Activation::Identity => a,
        }
    }

    /// Derivative, with `relu'(0) = 0`.
    #[inline]
    pub fn derivative(self, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = a.tanh();
                1.0 - t * t
            }
            Activation::Sigmoid => {
                let s = sigmoid(a);
                s * (1.0 - s)
            }
            Activation::Identity => 1.0,
        }
    }

    /// Lipschitz constant `G_γ`.
    pub fn lipschitz(self) -> f64 {
        match self {
            Activation::Sigmoid => 0.25,
            _ => 1.0,
        }
    }

    pub fn value_at_zero(self) -> f64 {
        self.eval(0.0)
    }

    pub fn id(self) -> u32 {
        match self {
            Activation::Relu => 0,
            Activation::Tanh => 1,
            Activation::Sigmoid => 2,
            Activation::Identity => 3,
        }
    }

    pub fn from_id(id: u32) -> Result<Self> {
        match id {
            0 => Ok(Activation::Relu),
            1 => Ok(Activation::Tanh),
            2 => Ok(Activation::Sigmoid),
            3 => Ok(Activation::Identity),
            _ => Err(Error::invalid(format!("unknown activation id {id}"))),
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Sigmoid => "sigmoid",
            Activation::Identity => "identity",
        })
    }
}

impl FromStr for Activation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            "sigmoid" => Ok(Activation::Sigmoid),
            "identity" | "linear" => Ok(Activation::Identity),
            _ => Err(Error::invalid(format!("unknown activation {s:?}"))),
        }
    }
}

/// Logistic function, evaluated without overflow for large `|a|`.
#[inline]
pub fn sigmoid(a: f64) -> f64 {
    if a >= 0.0 {
        1.0 / (1.0 + (-a).exp())
    } else {
        let e = a.exp();
        e / (1.0 + e)
    }
}

/// Current weights: `W` is `m × d`, `V` is `c × m`.
#[derive(Debug, Clone, PartialEq)]
pub struct SnnParams {
    pub w: Matrix,
    pub v: Matrix,
    pub activation: Activation,
}

impl SnnParams {
    pub fn new(w: Matrix, v: Matrix, activation: Activation) -> Result<Self> {
        if v.cols() != w.rows() {
            return Err(Error::shape(
                "SnnParams::new",
                format!("V with {} columns", w.rows()),
                format!("{} columns", v.cols()),
            ));
        }
        if !w.is_finite() || !v.is_finite() {
            return Err(Error::invalid("non-finite weights"));
        }
        Ok(SnnParams { w, v, activation })
    }

    pub fn m(&self) -> usize {
        self.w.rows()
    }

    pub fn d(&self) -> usize {
        self.w.cols()
    }

    pub fn c(&self) -> usize {
        self.v.rows()
    }

    /// Pre-activations `W X` (`m × n`).
    pub fn preactivations(&self, x: &Matrix) -> Result<Matrix> {
        if x.rows() != self.d() {
            return Err(Error::shape("forward", format!("X with {} rows", self.d()), x.rows()));
        }
        self.w.matmul(x)
    }

    /// Hidden activations `γ(W X)` (`m × n`).
    pub fn hidden(&self, x: &Matrix) -> Result<Matrix> {
        let act = self.activation;
        Ok(self.preactivations(x)?.map(|a| act.eval(a)))
    }

    /// Network outputs `V γ(W X)` (`c × n`).
    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        self.v.matmul(&self.hidden(x)?)
    }
}

/// Frozen initialization `(W0, V0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitSnapshot {
    w0: Matrix,
    v0: Matrix,
}

impl InitSnapshot {
    pub fn new(w0: Matrix, v0: Matrix) -> Result<Self> {
        if v0.cols() != w0.rows() {
            return Err(Error::shape("InitSnapshot::new", w0.rows(), v0.cols()));
        }
        Ok(InitSnapshot { w0, v0 })
    }

    pub fn of(params: &SnnParams) -> Self {
        InitSnapshot {
            w0: params.w.clone(),
            v0: params.v.clone(),
        }
    }

    pub fn w0(&self) -> &Matrix {
        &self.w0
    }

    pub fn v0(&self) -> &Matrix {
        &self.v0
    }

    pub fn matches(&self, params: &SnnParams) -> bool {
        self.w0.shape() == params.w.shape() && self.v0.shape() == params.v.shape()
    }

    /// Order-sensitive 64-bit digest of the stored bits (FNV-1a).
    pub fn digest(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for x in self.w0.data().iter().chain(self.v0.data()) {
            for b in x.to_bits().to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        h
    }
}

/// Kaiming-normal (fan-in, gain √2) initialization of both layers:
/// `W ~ N(0, 2/d)`, `V ~ N(0, 2/m)`.
pub fn init_kaiming(
    rng: &mut SeededRng,
    m: usize,
    d: usize,
    c: usize,
    activation: Activation,
) -> Result<(SnnParams, InitSnapshot)> {
    if m == 0 || d == 0 || c == 0 {
        return Err(Error::invalid(format!("dimensions must be positive, got m={m} d={d} c={c}")));
    }
    let sw = (2.0 / d as f64).sqrt();
    let sv = (2.0 / m as f64).sqrt();
    let w = Matrix::from_fn(m, d, |_, _| sw * rng.normal());
    let v = Matrix::from_fn(c, m, |_, _| sv * rng.normal());
    let params = SnnParams::new(w, v, activation)?;
    let snap = InitSnapshot::of(&params);
    Ok((params, snap))
}

const MAGIC: &[u8; 8] = b"SNNCKPT1";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: SnnParams,
    pub snapshot: InitSnapshot,
    pub seed: u64,
    pub epochs: u32,
    pub final_train_error: f64,
}

impl Checkpoint {
    /// Layout: magic, then little-endian `u32` version, m, d, c, activation id,
    /// `u64` seed, the `f64` arrays W, V, W0, V0 (row-major), `u32` epochs and
    /// `f64` final training error.
    pub fn to_bytes(&self) -> Vec<u8> {
        let p = &self.params;
        let mut out = Vec::with_capacity(8 + 28 + 16 * (p.w.data().len() + p.v.data().len()) + 12);
        out.extend_from_slice(MAGIC);
        for v in [VERSION, p.m() as u32, p.d() as u32, p.c() as u32, p.activation.id()] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&self.seed.to_le_bytes());
        for m in [&p.w, &p.v, self.snapshot.w0(), self.snapshot.v0()] {
            for x in m.data() {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out.extend_from_slice(&self.epochs.to_le_bytes());
        out.extend_from_slice(&self.final_train_error.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::Checkpoint("bad magic".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let (m, d, c) = (r.u32()? as usize, r.u32()? as usize, r.u32()? as usize);
        let activation = Activation::from_id(r.u32()?)
            .map_err(|e| Error::Checkpoint(e.to_string()))?;
        let seed = r.u64()?;
        let md = m
            .checked_mul(d)
            .ok_or_else(|| Error::Checkpoint("dimension overflow".into()))?;
        let cm = c
            .checked_mul(m)
            .ok_or_else(|| Error::Checkpoint("dimension overflow".into()))?;
        let payload = md
            .checked_add(cm)
            .and_then(|k| k.checked_mul(16))
            .and_then(|k| k.checked_add(12))
            .ok_or_else(|| Error::Checkpoint("dimension overflow".into()))?;
        if r.remaining() != payload {
            return Err(Error::Checkpoint(format!(
                "header declares {payload} payload bytes, file has {}",
                r.remaining()
            )));
        }
        let w = r.matrix(m, d)?;
        let v = r.matrix(c, m)?;
        let w0 = r.matrix(m, d)?;
        let v0 = r.matrix(c, m)?;
        let epochs = r.u32()?;
        let final_train_error = r.f64()?;
        Ok(Checkpoint {
            params: SnnParams::new(w, v, activation)
                .map_err(|e| Error::Checkpoint(e.to_string()))?,
            snapshot: InitSnapshot::new(w0, v0).map_err(|e| Error::Checkpoint(e.to_string()))?,
            seed,
            epochs,
            final_train_error,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Checkpoint::from_bytes(&std::fs::read(path)?)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn take(&mut self, k: usize) -> Result<&'a [u8]> {
        if self.remaining() < k {
            return Err(Error::Checkpoint(format!(
                "truncated at byte {}, need {k} more",
                self.pos
            )));
        }
        let s = &self.bytes[self.pos..self.pos + k];
        self.pos += k;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn matrix(&mut self, rows: usize, cols: usize) -> Result<Matrix> {
        let data = (0..rows * cols).map(|_| self.f64()).collect::<Result<Vec<_>>>()?;
        Matrix::from_vec(rows, cols, data).map_err(|e| Error::Checkpoint(e.to_string()))
    }
}
