use serde::{Deserialize, Serialize};

use super::{distance, holds_with_slack, LEMMA_SLACK};
use crate::error::{Error, Result};
use crate::linalg::{jacobi_svd, top_k_svd};
use crate::objective::{grad_component, grad_full, grad_loss_component, FactorPair};
use crate::sensing::SensingDataset;

/// Relative tolerance for `‖Z̃ᵀZ‖²_F = ‖UᵀU − VᵀV‖²_F`.
const IMBALANCE_IDENTITY_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    /// `⟨∇f̃(Z), H⟩`.
    pub curvature_lhs: f64,
    /// `σ_r/10‖H‖² + ⅛‖X − X*‖² + 1/16‖Z̃ᵀZ‖² − ⅓‖H‖⁴`.
    pub curvature_rhs: f64,
    pub curvature_holds: bool,
    /// `|‖Z̃ᵀZ‖² − ‖UᵀU − VᵀV‖²|` relative to the larger of the two and 1.
    pub imbalance_identity_gap: f64,
    /// `min_i (bound − ‖∇f̃ᵢ(Z)‖²)`.
    pub smoothness_margin: f64,
    /// `min_i (bound − ‖∇ℓ̃ᵢ(Z)‖²)` with the imbalance term dropped.
    pub loss_smoothness_margin: f64,
    pub smoothness_holds: bool,
    pub dist: f64,
    pub z_spectral_norm: f64,
    pub sigma_r: f64,
    pub delta_prime: f64,
}

impl ProbeReport {
    pub fn holds(&self) -> bool {
        self.curvature_holds && self.smoothness_holds && self.imbalance_identity_gap <= IMBALANCE_IDENTITY_TOL
    }
}

/// `(8(1+δ′)²‖X − X*‖² + ‖UᵀU − VᵀV‖²)·‖Z‖₂²`.
pub fn smoothness_bound(err_sq: f64, imbalance_sq: f64, z_norm: f64, delta_prime: f64) -> f64 {
    (8.0 * (1.0 + delta_prime).powi(2) * err_sq + imbalance_sq) * z_norm * z_norm
}

/// Evaluates the local curvature inequality of the full objective and the
/// per-batch smoothness bound on a noiseless dataset, given an estimate
/// `delta_prime` of the per-batch restricted isometry constant.
pub fn probe_curvature_smoothness(
    ds: &SensingDataset,
    z: &FactorPair,
    zstar: &FactorPair,
    delta_prime: f64,
) -> Result<ProbeReport> {
    let noisy = !ds.noise_spec().is_noiseless() || ds.noise().is_some_and(|e| e.iter().any(|&v| v != 0.0));
    if noisy {
        return Err(Error::InvalidArgument(
            "curvature and smoothness probes need a noiseless dataset".into(),
        ));
    }
    let r = zstar.rank();
    let xstar = zstar.product();
    let sigma_r = top_k_svd(&xstar, r)?.s[r - 1];
    let align = distance(z, zstar)?;
    let h_sq = align.dist * align.dist;

    let x = z.product();
    let err_sq = x.sub(&xstar)?.frobenius_norm_sq();
    let zs = z.stacked();
    let cross_sq = z.stacked_flipped().t_matmul(&zs)?.frobenius_norm_sq();
    let imbalance_sq = z.imbalance().frobenius_norm_sq();
    let imbalance_identity_gap = (cross_sq - imbalance_sq).abs() / 1f64.max(cross_sq).max(imbalance_sq);

    let curvature_lhs = grad_full(ds, z)?.stacked().dot(&align.h)?;
    let curvature_rhs = sigma_r / 10.0 * h_sq + err_sq / 8.0 + cross_sq / 16.0 - h_sq * h_sq / 3.0;

    let z_norm = jacobi_svd(&zs)?.s[0];
    let bound = smoothness_bound(err_sq, imbalance_sq, z_norm, delta_prime);
    let loss_bound = smoothness_bound(err_sq, 0.0, z_norm, delta_prime);
    let mut smoothness_margin = f64::INFINITY;
    let mut loss_smoothness_margin = f64::INFINITY;
    let mut smoothness_holds = true;
    for i in 0..ds.num_batches() {
        let g = grad_component(ds, z, i)?.frobenius_norm_sq();
        let gl = grad_loss_component(ds, z, i)?.frobenius_norm_sq();
        smoothness_margin = smoothness_margin.min(bound - g);
        loss_smoothness_margin = loss_smoothness_margin.min(loss_bound - gl);
        smoothness_holds &= holds_with_slack(g, bound, LEMMA_SLACK) && holds_with_slack(gl, loss_bound, LEMMA_SLACK);
    }

    Ok(ProbeReport {
        curvature_lhs,
        curvature_rhs,
        curvature_holds: holds_with_slack(curvature_rhs, curvature_lhs, LEMMA_SLACK),
        imbalance_identity_gap,
        smoothness_margin,
        loss_smoothness_margin,
        smoothness_holds,
        dist: align.dist,
        z_spectral_norm: z_norm,
        sigma_r,
        delta_prime,
    })
}
