//! Dense linear algebra: matrices, QR, SVD, spectral norm, Procrustes and
//! matrix file formats.

pub mod io;
mod matrix;
pub mod procrustes;
pub mod qr;
pub mod svd;

pub use matrix::{frobenius_inner, Matrix};
pub use procrustes::procrustes_rotation;
pub use svd::{
    best_rank_approx, jacobi_svd, spectral_norm, top_k_svd, truncated_svd, SvdTriplet, DEFAULT_SPECTRAL_TOL,
    DEFAULT_SVD_MAX_ITER, DEFAULT_SVD_TOL,
};

pub(crate) use matrix::{axpy_slice, dot};
