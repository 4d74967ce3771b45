//! Recovery algorithms: projected-gradient initialization, the
//! variance-reduced stochastic solver and a full-gradient baseline.

mod gd;
mod init;
mod svrg;

pub use gd::gd_solve;
pub use init::{init_projected_gd, InitConfig};
pub use svrg::{svrg_solve, svrg_solve_observed, variance_reduced_direction, EpochStart};

use serde::{Deserialize, Serialize};

use crate::diagnostics::distance;
use crate::error::{Error, Result};
use crate::linalg::{spectral_norm, Matrix, DEFAULT_SPECTRAL_TOL};
use crate::objective::{objective_full, FactorPair};
use crate::sensing::SensingDataset;

/// Which iterate of an epoch becomes the next snapshot.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputPolicy {
    /// Iterate `Zᵗ` at an index `t` drawn uniformly from `{0, …, m−1}`.
    #[default]
    RandomT,
    /// Final inner iterate `Zᵐ`.
    LastIterate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Step size η.
    pub eta: f64,
    /// Inner iterations per epoch.
    pub inner_iters: usize,
    /// Outer epochs.
    pub epochs: usize,
    #[serde(default)]
    pub output_policy: OutputPolicy,
    #[serde(default)]
    pub seed: u64,
    /// Stop early once the relative error (with a reference) or the full
    /// gradient norm (without one) drops to this value.
    #[serde(default)]
    pub tol_stop: Option<f64>,
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "step size must be finite and non-negative, got {}",
                self.eta
            )));
        }
        if self.inner_iters == 0 || self.epochs == 0 {
            return Err(Error::InvalidArgument(format!(
                "inner iterations ({}) and epochs ({}) must be positive",
                self.inner_iters, self.epochs
            )));
        }
        Ok(())
    }
}

/// Heuristic step size `scale / ‖Ũ⁰Ṽ⁰ᵀ‖₂`.
pub fn default_eta(z0: &FactorPair, scale: f64) -> Result<f64> {
    let sigma1 = spectral_norm(&z0.product(), DEFAULT_SPECTRAL_TOL)?;
    if sigma1 <= 0.0 {
        return Err(Error::ZeroNorm("default_eta"));
    }
    Ok(scale / sigma1)
}

/// Known ground truth, used only for monitoring.
#[derive(Clone, Debug)]
pub struct Reference {
    pub xstar: Matrix,
    /// Balanced factors of `xstar`.
    pub zstar: FactorPair,
    norm_sq: f64,
}

impl Reference {
    pub fn new(xstar: Matrix, rank: usize) -> Result<Self> {
        let zstar = FactorPair::balanced_from_matrix(&xstar, rank)?;
        let norm_sq = xstar.frobenius_norm_sq();
        if norm_sq == 0.0 {
            return Err(Error::ZeroNorm("Reference::new"));
        }
        Ok(Reference { xstar, zstar, norm_sq })
    }

    /// `‖UVᵀ − X*‖²_F / ‖X*‖²_F`.
    pub fn rel_error(&self, z: &FactorPair) -> Result<f64> {
        Ok(z.product().sub(&self.xstar)?.frobenius_norm_sq() / self.norm_sq)
    }

    pub fn dist(&self, z: &FactorPair) -> Result<f64> {
        Ok(distance(z, &self.zstar)?.dist)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub epoch: usize,
    pub data_passes: f64,
    pub objective: f64,
    pub rel_error: Option<f64>,
    pub dist: Option<f64>,
}

/// Per-epoch progress. Record 0 is the starting point at zero data passes.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveTrace {
    pub records: Vec<TraceRecord>,
}

pub const TRACE_CSV_HEADER: &str = "epoch,data_passes,objective,rel_error,dist";

impl SolveTrace {
    pub(crate) fn record(
        &mut self,
        ds: &SensingDataset,
        z: &FactorPair,
        epoch: usize,
        data_passes: f64,
        reference: Option<&Reference>,
    ) -> Result<()> {
        let (rel_error, dist) = match reference {
            Some(r) => (Some(r.rel_error(z)?), Some(r.dist(z)?)),
            None => (None, None),
        };
        self.records.push(TraceRecord {
            epoch,
            data_passes,
            objective: objective_full(ds, z)?,
            rel_error,
            dist,
        });
        Ok(())
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn final_rel_error(&self) -> Option<f64> {
        self.last().and_then(|r| r.rel_error)
    }

    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut out = String::from(TRACE_CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.epoch,
                r.data_passes,
                r.objective,
                opt(r.rel_error),
                opt(r.dist)
            ));
        }
        out
    }
}

pub(crate) fn check_finite(z: &FactorPair, location: impl FnOnce() -> String) -> Result<()> {
    if z.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite { location: location() })
    }
}
