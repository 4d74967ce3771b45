use serde::{Deserialize, Serialize};

use super::check_finite;
use crate::error::{Error, Result};
use crate::linalg::{top_k_svd, Matrix, SvdTriplet};
use crate::objective::FactorPair;
use crate::sensing::SensingDataset;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitConfig {
    /// Step size τ.
    pub tau: f64,
    /// Number of projected-gradient steps.
    pub iterations: usize,
    /// Target rank.
    pub rank: usize,
}

impl InitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) || self.iterations == 0 || self.rank == 0 {
            return Err(Error::InvalidArgument(format!(
                "init needs tau > 0, iterations >= 1, rank >= 1; got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Projected gradient descent on the unfactored loss from `X₀ = 0`,
/// `X_s = P_r[X_{s−1} − τ∇L(X_{s−1})]`, followed by the balanced split
/// `U = Ū Σ^{1/2}`, `V = V̄ Σ^{1/2}` of the final iterate.
pub fn init_projected_gd(ds: &SensingDataset, cfg: &InitConfig) -> Result<FactorPair> {
    cfg.validate()?;
    if cfg.rank > ds.d1().min(ds.d2()) {
        return Err(Error::InvalidArgument(format!(
            "rank {} exceeds min(d1, d2) = {}",
            cfg.rank,
            ds.d1().min(ds.d2())
        )));
    }
    if ds.is_empty() {
        return Err(Error::InvalidArgument("empty dataset".into()));
    }
    let n = ds.len() as f64;
    let mut x = Matrix::zeros(ds.d1(), ds.d2());
    let mut svd: Option<SvdTriplet> = None;
    for s in 1..=cfg.iterations {
        let residuals = ds.residuals(&x, ds.full_range());
        let grad = ds.apply_adjoint(&residuals, ds.full_range())?;
        x.axpy(-cfg.tau / n, &grad)?;
        if !x.is_finite() {
            return Err(Error::NonFinite {
                location: format!("initialization step {s}"),
            });
        }
        let t = top_k_svd(&x, cfg.rank)?;
        x = t.reconstruct();
        svd = Some(t);
    }
    let svd = svd.expect("at least one iteration");
    let root: Vec<f64> = svd.s.iter().map(|s| s.sqrt()).collect();
    let z = FactorPair::new(svd.u.scale_columns(&root), svd.v.scale_columns(&root))?;
    check_finite(&z, || "initialization output".into())?;
    Ok(z)
}
