use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sensing::{EnsembleKind, NoiseSpec};
use crate::solvers::OutputPolicy;

/// Problem dimensions `(d1, d2, r)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    /// 50 × 30, rank 3.
    #[default]
    S1,
    /// 50 × 30, rank 5.
    S2,
    /// 70 × 30, rank 3.
    S3,
    /// 70 × 30, rank 5.
    S4,
    Custom {
        d1: usize,
        d2: usize,
        r: usize,
    },
}

impl Setting {
    pub fn dims(self) -> (usize, usize, usize) {
        match self {
            Setting::S1 => (50, 30, 3),
            Setting::S2 => (50, 30, 5),
            Setting::S3 => (70, 30, 3),
            Setting::S4 => (70, 30, 5),
            Setting::Custom { d1, d2, r } => (d1, d2, r),
        }
    }

    /// `r·max(d1, d2)`.
    pub fn rd_prime(self) -> usize {
        let (d1, d2, r) = self.dims();
        r * d1.max(d2)
    }
}

/// Measurement counts, either absolute or as multiples of `r·d′`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NGrid {
    Absolute(Vec<usize>),
    Multiples(Vec<f64>),
}

impl Default for NGrid {
    fn default() -> Self {
        NGrid::Multiples(vec![5.0])
    }
}

impl NGrid {
    /// Resolved counts, rounding multiples to the nearest integer.
    pub fn counts(&self, setting: Setting) -> Vec<usize> {
        match self {
            NGrid::Absolute(v) => v.clone(),
            NGrid::Multiples(v) => v
                .iter()
                .map(|c| (c * setting.rd_prime() as f64).round() as usize)
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    /// `η = eta_scale / ‖U⁰V⁰ᵀ‖₂`.
    pub eta_scale: f64,
    /// `m = inner_multiplier · n`.
    pub inner_multiplier: usize,
    /// Effective data-pass budget; the epoch count is the largest that fits.
    pub data_passes: f64,
    pub output_policy: OutputPolicy,
    pub tol_stop: Option<f64>,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            eta_scale: 0.1,
            inner_multiplier: 1,
            data_passes: 50.0,
            output_policy: OutputPolicy::RandomT,
            tol_stop: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GdSettings {
    /// `η = eta_scale / ‖U⁰V⁰ᵀ‖₂`.
    pub eta_scale: f64,
}

impl Default for GdSettings {
    fn default() -> Self {
        GdSettings { eta_scale: 0.1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitSettings {
    pub tau: f64,
    pub iterations: usize,
}

impl Default for InitSettings {
    fn default() -> Self {
        InitSettings {
            tau: 0.5,
            iterations: 1,
        }
    }
}

/// Grid searched for `m` and `b` on held-out seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrossValidation {
    /// Candidate `m / n` ratios.
    pub inner_multipliers: Vec<usize>,
    /// Candidate batch counts `n = N / b`; those not dividing `N` are skipped.
    pub batch_counts: Vec<usize>,
    pub seeds: usize,
}

impl Default for CrossValidation {
    fn default() -> Self {
        CrossValidation {
            inner_multipliers: vec![1, 2, 5],
            batch_counts: vec![50, 20, 10],
            seeds: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub setting: Setting,
    pub ensemble: EnsembleKind,
    /// Standard deviation of Gaussian noise; 0 means noiseless.
    pub noise_sigma: f64,
    pub n_grid: NGrid,
    pub trials: usize,
    pub master_seed: u64,
    /// Number of batches `n` (so `b = N / n`) when not cross-validating.
    pub num_batches: usize,
    pub solver: SolverSettings,
    pub gd: GdSettings,
    pub init: InitSettings,
    pub recovery_threshold: f64,
    pub cross_validation: Option<CrossValidation>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            setting: Setting::S1,
            ensemble: EnsembleKind::GaussianIid,
            noise_sigma: 0.0,
            n_grid: NGrid::default(),
            trials: 30,
            master_seed: 0,
            num_batches: 10,
            solver: SolverSettings::default(),
            gd: GdSettings::default(),
            init: InitSettings::default(),
            recovery_threshold: 1e-3,
            cross_validation: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let (d1, d2, r) = self.setting.dims();
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if d1 == 0 || d2 == 0 || r == 0 || r > d1.min(d2) {
            return bad(format!("invalid dimensions ({d1}, {d2}, {r})"));
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if !(self.recovery_threshold > 0.0) {
            return bad(format!(
                "recovery threshold must be positive, got {}",
                self.recovery_threshold
            ));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad(format!(
                "noise sigma must be finite and non-negative, got {}",
                self.noise_sigma
            ));
        }
        let counts = self.n_grid.counts(self.setting);
        if counts.is_empty() || counts.contains(&0) {
            return bad("measurement grid must be non-empty with positive entries".into());
        }
        if !(self.solver.eta_scale > 0.0 && self.gd.eta_scale > 0.0) {
            return bad("step-size scales must be positive".into());
        }
        if self.solver.inner_multiplier == 0 || !(self.solver.data_passes >= 1.0) {
            return bad("inner multiplier must be positive and the data-pass budget at least 1".into());
        }
        if !(self.init.tau > 0.0) || self.init.iterations == 0 {
            return bad("initialization needs tau > 0 and at least one iteration".into());
        }
        if let Some(cv) = &self.cross_validation {
            if cv.inner_multipliers.is_empty() || cv.batch_counts.is_empty() || cv.seeds == 0 {
                return bad("cross-validation grid and seed count must be non-empty".into());
            }
        }
        Ok(())
    }

    pub fn noise(&self) -> NoiseSpec {
        if self.noise_sigma > 0.0 {
            NoiseSpec::gaussian(self.noise_sigma)
        } else {
            NoiseSpec::NONE
        }
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }
}
