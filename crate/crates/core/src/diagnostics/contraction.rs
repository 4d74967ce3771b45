use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{top_k_svd, Matrix};

/// `ησ₁ = 1/(SIMPLIFIED_STEP_CONSTANT·κ(1+δ′)²)` selects the simplified regime.
pub const SIMPLIFIED_STEP_CONSTANT: f64 = 576.0;

const SIMPLIFIED_REL_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralSummary {
    pub sigma1: f64,
    pub sigma_r: f64,
    pub kappa: f64,
    pub r: usize,
}

impl SpectralSummary {
    pub fn new(sigma1: f64, sigma_r: f64, r: usize) -> Result<Self> {
        if !(sigma_r > 0.0 && sigma1 >= sigma_r && sigma1.is_finite()) || r == 0 {
            return Err(Error::InvalidArgument(format!(
                "need sigma1 >= sigma_r > 0 and r >= 1, got sigma1 = {sigma1}, sigma_r = {sigma_r}, r = {r}"
            )));
        }
        Ok(SpectralSummary {
            sigma1,
            sigma_r,
            kappa: sigma1 / sigma_r,
            r,
        })
    }

    /// Leading and `r`-th singular values of `x`.
    pub fn of_matrix(x: &Matrix, r: usize) -> Result<Self> {
        let svd = top_k_svd(x, r)?;
        let sigma_r = svd.s[r - 1];
        if sigma_r <= 0.0 {
            return Err(Error::RankDeficient {
                op: "SpectralSummary::of_matrix",
                sigma_r,
            });
        }
        SpectralSummary::new(svd.s[0], sigma_r, r)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionReport {
    pub eta: f64,
    pub m: usize,
    pub kappa: f64,
    pub sigma1: f64,
    pub delta4r_prime: f64,
    /// `15κ(1/(ησ₁m) + 384ησ₁(1+δ′)²)`.
    pub rho: f64,
    pub converges: bool,
    /// `15κ/(ησ₁m) + 2/3`, reported only when `ησ₁ = 1/(576κ(1+δ′)²)`.
    /// This simplification does not agree with `rho` in that regime: the
    /// second term of `rho` evaluates to 10 there, not 2/3.
    pub simplified_rho: Option<f64>,
}

/// Per-epoch contraction factor of the expected squared distance.
pub fn contraction_rho(eta: f64, m: usize, summary: &SpectralSummary, delta4r_prime: f64) -> Result<ContractionReport> {
    if !(eta > 0.0 && eta.is_finite()) || m == 0 || !(delta4r_prime >= 0.0 && delta4r_prime.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "need eta > 0, m >= 1, delta >= 0; got eta = {eta}, m = {m}, delta = {delta4r_prime}"
        )));
    }
    let kappa = summary.kappa;
    let es = eta * summary.sigma1;
    let inflate = (1.0 + delta4r_prime).powi(2);
    let rho = 15.0 * kappa * (1.0 / (es * m as f64) + 384.0 * es * inflate);

    let simplified_es = 1.0 / (SIMPLIFIED_STEP_CONSTANT * kappa * inflate);
    let simplified_rho = ((es - simplified_es).abs() <= SIMPLIFIED_REL_TOL * simplified_es)
        .then(|| 15.0 * kappa / (es * m as f64) + 2.0 / 3.0);

    Ok(ContractionReport {
        eta,
        m,
        kappa,
        sigma1: summary.sigma1,
        delta4r_prime,
        rho,
        converges: rho < 1.0,
        simplified_rho,
    })
}
