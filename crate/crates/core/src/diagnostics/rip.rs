use std::ops::Range;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::rng::{derive_seed, gaussian_matrix, stream};
use crate::sensing::SensingDataset;

/// Monte-Carlo lower bound on the restricted isometry constant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RipEstimate {
    pub r_order: usize,
    /// `max |‖A(X)‖²/(M‖X‖²_F) − 1|` over the sampled `X`.
    pub delta_hat: f64,
    pub trials: usize,
    /// Signed deviation `ratio − 1` of the worst trial.
    pub max_ratio_dev: f64,
}

/// `G₁G₂ᵀ/‖G₁G₂ᵀ‖_F` with Gaussian `d1 × r` and `d2 × r` factors.
pub fn random_unit_low_rank(rng: &mut impl Rng, d1: usize, d2: usize, r: usize) -> Matrix {
    let g1 = gaussian_matrix(rng, d1, r);
    let g2 = gaussian_matrix(rng, d2, r);
    let x = g1.matmul_t(&g2).expect("shared inner dimension");
    let norm = x.frobenius_norm();
    x.scale(1.0 / norm)
}

/// `(1/M)‖A(X)‖²₂ / ‖X‖²_F` over the measurements in `range`.
pub fn rip_ratio(ds: &SensingDataset, x: &Matrix, range: Range<usize>) -> Result<f64> {
    let norm_sq = x.frobenius_norm_sq();
    if norm_sq == 0.0 {
        return Err(Error::ZeroNorm("rip_ratio"));
    }
    let count = range.len() as f64;
    let ax = ds.apply_operator(x, range)?;
    Ok(dot(&ax, &ax) / (count * norm_sq))
}

/// Worst deviation over the given test matrices.
pub fn rip_estimate_from(
    ds: &SensingDataset,
    range: Range<usize>,
    r_order: usize,
    matrices: &[Matrix],
) -> Result<RipEstimate> {
    if matrices.is_empty() {
        return Err(Error::InvalidArgument("rip estimate needs at least one trial".into()));
    }
    if range.is_empty() {
        return Err(Error::InvalidArgument("rip estimate over an empty range".into()));
    }
    let devs = matrices
        .par_iter()
        .map(|x| rip_ratio(ds, x, range.clone()).map(|q| q - 1.0))
        .collect::<Result<Vec<_>>>()?;
    let worst = devs
        .iter()
        .copied()
        .fold(0.0f64, |acc, d| if d.abs() > acc.abs() { d } else { acc });
    Ok(RipEstimate {
        r_order,
        delta_hat: worst.abs(),
        trials: matrices.len(),
        max_ratio_dev: worst,
    })
}

/// Restricted isometry estimate over measurements `range`, from `trials`
/// random unit-norm rank-`r_order` matrices. This is a lower bound on the
/// true constant, which is a supremum over all such matrices.
pub fn rip_estimate_range(
    ds: &SensingDataset,
    range: Range<usize>,
    r_order: usize,
    trials: usize,
    seed: u64,
) -> Result<RipEstimate> {
    if trials == 0 || r_order == 0 {
        return Err(Error::InvalidArgument(format!(
            "trials ({trials}) and rank order ({r_order}) must be positive"
        )));
    }
    let matrices: Vec<Matrix> = (0..trials as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(derive_seed(seed, "rip", k), "rip/trial");
            random_unit_low_rank(&mut rng, ds.d1(), ds.d2(), r_order)
        })
        .collect();
    rip_estimate_from(ds, range, r_order, &matrices)
}

pub fn rip_estimate(ds: &SensingDataset, r_order: usize, trials: usize, seed: u64) -> Result<RipEstimate> {
    rip_estimate_range(ds, ds.full_range(), r_order, trials, seed)
}

/// Whether `‖ε‖₂ ≤ 2ν√b`.
pub fn noise_assumption_check(epsilon: &[f64], nu: f64, b: usize) -> bool {
    dot(epsilon, epsilon).sqrt() <= 2.0 * nu * (b as f64).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaB1Report {
    /// `|(1/M)⟨A(X), A(Y)⟩ − ⟨X, Y⟩| / (‖X‖_F‖Y‖_F)`.
    pub deviation: f64,
    pub delta_hat: f64,
    /// `deviation ≤ delta_hat`; informative only, since `delta_hat` is an estimate.
    pub within_estimate: bool,
}

/// Normalized inner-product deviation of the operator on `x`, `y`.
pub fn check_lemma_b1(ds: &SensingDataset, x: &Matrix, y: &Matrix, delta_hat: f64) -> Result<LemmaB1Report> {
    let (nx, ny) = (x.frobenius_norm(), y.frobenius_norm());
    if nx == 0.0 || ny == 0.0 {
        return Err(Error::ZeroNorm("check_lemma_b1"));
    }
    let ax = ds.apply_operator(x, ds.full_range())?;
    let ay = ds.apply_operator(y, ds.full_range())?;
    let m = ds.len() as f64;
    let deviation = (dot(&ax, &ay) / m - x.dot(y)?).abs() / (nx * ny);
    Ok(LemmaB1Report {
        deviation,
        delta_hat,
        within_estimate: deviation <= delta_hat,
    })
}
