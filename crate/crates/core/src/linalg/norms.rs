use crate::error::{Error, Result};

use super::matrix::Matrix;
use super::rng::SeededRng;

/// Below this length [`pairwise_sum`] adds sequentially.
const BLOCK: usize = 64;

/// Pairwise (cascade) summation. Error grows as O(log n) rather than O(n).
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Sum of `f(x)` over `xs` with the same cascade as [`pairwise_sum`].
pub fn pairwise_sum_by(xs: &[f64], f: impl Fn(f64) -> f64 + Copy) -> f64 {
    if xs.len() <= BLOCK {
        return xs.iter().map(|&x| f(x)).sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum_by(&xs[..mid], f) + pairwise_sum_by(&xs[mid..], f)
}

pub fn l2_norm(xs: &[f64]) -> f64 {
    pairwise_sum_by(xs, |x| x * x).sqrt()
}

pub fn frobenius_norm(m: &Matrix) -> f64 {
    l2_norm(m.data())
}

/// Exponent for [`pq_norm`]: `1`, `2` or `∞`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormIndex {
    One,
    Two,
    Inf,
}

impl NormIndex {
    fn apply(self, xs: &[f64]) -> f64 {
        match self {
            NormIndex::One => pairwise_sum_by(xs, f64::abs),
            NormIndex::Two => l2_norm(xs),
            NormIndex::Inf => xs.iter().fold(0.0, |a, &x| a.max(x.abs())),
        }
    }
}

impl TryFrom<f64> for NormIndex {
    type Error = Error;

    fn try_from(p: f64) -> Result<Self> {
        if p == 1.0 {
            Ok(NormIndex::One)
        } else if p == 2.0 {
            Ok(NormIndex::Two)
        } else if p == f64::INFINITY {
            Ok(NormIndex::Inf)
        } else {
            Err(Error::invalid(format!("unsupported norm index {p}")))
        }
    }
}

/// `‖(‖M_{:,1}‖_p, …, ‖M_{:,cols}‖_p)‖_q`.
pub fn pq_norm(m: &Matrix, p: NormIndex, q: NormIndex) -> f64 {
    if p == NormIndex::Two && q == NormIndex::Two {
        return frobenius_norm(m);
    }
    let col_norms: Vec<f64> = (0..m.cols()).map(|j| p.apply(&m.column(j))).collect();
    q.apply(&col_norms)
}

pub fn row_l2_norms(m: &Matrix) -> Vec<f64> {
    (0..m.rows()).map(|i| l2_norm(m.row(i))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralEstimate {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub const DEFAULT_SPECTRAL_TOL: f64 = 1e-10;
pub const DEFAULT_SPECTRAL_MAX_ITER: usize = 1000;

/// Largest singular value by power iteration on `MᵀM` or `MMᵀ`, whichever is
/// smaller. The Gram matrix is never formed; each step applies `M` and `Mᵀ`.
///
/// Stops when the Rayleigh quotient changes by less than `tol` relative.
pub fn spectral_norm(
    m: &Matrix,
    tol: f64,
    max_iter: usize,
    rng: &mut SeededRng,
) -> Result<SpectralEstimate> {
    if m.is_empty() {
        return Err(Error::invalid("spectral norm of an empty matrix"));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("tol must be positive, got {tol}")));
    }
    // iterate on the side with the smaller dimension
    let right = m.cols() <= m.rows();
    let k = if right { m.cols() } else { m.rows() };
    let apply = |x: &[f64]| -> Vec<f64> {
        if right {
            m.t_matvec(&m.matvec(x))
        } else {
            m.matvec(&m.t_matvec(x))
        }
    };

    let mut x: Vec<f64> = (0..k).map(|_| rng.normal()).collect();
    normalize(&mut x);
    let mut lambda = 0.0;
    for it in 1..=max_iter.max(1) {
        let y = apply(&x);
        let next = dot(&x, &y);
        let ny = l2_norm(&y);
        if ny == 0.0 {
            // x lies in the null space: either M = 0 or an unlucky start.
            if frobenius_norm(m) == 0.0 {
                return Ok(SpectralEstimate {
                    value: 0.0,
                    iterations: it,
                    converged: true,
                });
            }
            x = (0..k).map(|_| rng.normal()).collect();
            normalize(&mut x);
            continue;
        }
        let done = it > 1 && (next - lambda).abs() <= tol * next.abs();
        lambda = next;
        x = y.into_iter().map(|v| v / ny).collect();
        if done {
            return Ok(SpectralEstimate {
                value: lambda.max(0.0).sqrt(),
                iterations: it,
                converged: true,
            });
        }
    }
    Ok(SpectralEstimate {
        value: lambda.max(0.0).sqrt(),
        iterations: max_iter,
        converged: false,
    })
}

/// [`spectral_norm`] with default tolerance and iteration cap, seeded by `seed`.
pub fn spectral_norm_default(m: &Matrix, seed: u64) -> Result<f64> {
    let mut rng = SeededRng::new(seed);
    spectral_norm(m, DEFAULT_SPECTRAL_TOL, DEFAULT_SPECTRAL_MAX_ITER, &mut rng).map(|e| e.value)
}

/// `n × c` matrix of independent Rademacher signs.
pub fn sample_signs(rng: &mut SeededRng, n: usize, c: usize) -> Matrix {
    Matrix::from_fn(n, c, |_, _| rng.sign())
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    if a.len() <= BLOCK {
        return a.iter().zip(b).map(|(x, y)| x * y).sum();
    }
    let mid = a.len() / 2;
    dot(&a[..mid], &b[..mid]) + dot(&a[mid..], &b[mid..])
}

fn normalize(x: &mut [f64]) {
    let n = l2_norm(x);
    if n > 0.0 {
        x.iter_mut().for_each(|v| *v /= n);
    }
}
