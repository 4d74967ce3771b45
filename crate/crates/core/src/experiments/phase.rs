use serde::{Deserialize, Serialize};

use super::{run_grid_point, schedule, trials_csv, CvSelection, ExperimentConfig, TrialRecord};
use crate::error::{Error, Result};

pub const PHASE_CSV_HEADER: &str = "N,N_over_rdprime,prob_recovery,trials";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub n_measurements: usize,
    pub ratio: f64,
    pub prob_recovery: f64,
    pub trials: usize,
}

#[derive(Clone, Debug)]
pub struct PhaseResult {
    pub points: Vec<PhasePoint>,
    pub trials: Vec<TrialRecord>,
    pub cv: Vec<CvSelection>,
}

impl PhaseResult {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{PHASE_CSV_HEADER}\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{}\n",
                p.n_measurements, p.ratio, p.prob_recovery, p.trials
            ));
        }
        out
    }

    pub fn trials_csv(&self) -> String {
        trials_csv("phase", &self.trials)
    }
}

/// Empirical exact-recovery probability for every measurement count.
pub fn run_phase(cfg: &ExperimentConfig) -> Result<PhaseResult> {
    cfg.validate()?;
    if cfg.noise_sigma != 0.0 {
        return Err(Error::InvalidArgument(
            "the phase-transition experiment is noiseless".into(),
        ));
    }
    let rdp = cfg.setting.rd_prime() as f64;
    let mut result = PhaseResult {
        points: Vec::new(),
        trials: Vec::new(),
        cv: Vec::new(),
    };
    for n_meas in cfg.n_grid.counts(cfg.setting) {
        let (b, m, sel) = schedule(cfg, "phase", n_meas)?;
        result.cv.extend(sel);
        let runs: Vec<TrialRecord> = run_grid_point(cfg, "phase", n_meas, b, m, false, false)
            .into_iter()
            .map(|r| r.svrg)
            .collect();
        let recovered = runs.iter().filter(|r| r.recovered).count();
        result.points.push(PhasePoint {
            n_measurements: n_meas,
            ratio: n_meas as f64 / rdp,
            prob_recovery: recovered as f64 / runs.len() as f64,
            trials: runs.len(),
        });
        result.trials.extend(runs);
    }
    Ok(result)
}
