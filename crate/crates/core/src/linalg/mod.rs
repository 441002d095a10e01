//! Dense matrices, norms and seeded randomness.

mod matrix;
mod norms;
mod rng;

pub use matrix::{gemm, Matrix, MatrixView, Vector};
pub use norms::{
    dot, frobenius_norm, l2_norm, pairwise_sum, pairwise_sum_by, pq_norm, row_l2_norms,
    sample_signs, spectral_norm, spectral_norm_default, NormIndex, SpectralEstimate,
    DEFAULT_SPECTRAL_MAX_ITER, DEFAULT_SPECTRAL_TOL,
};
pub use rng::SeededRng;
