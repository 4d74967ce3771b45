use serde::{Deserialize, Serialize};

use super::{run_grid_point, schedule, trials_csv, CvSelection, ExperimentConfig, TrialRecord};
use crate::error::{Error, Result};

pub const STATERR_CSV_HEADER: &str = "N,N_over_rdprime,mean_sq_rel_error,stderr,trials,failures";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatErrPoint {
    pub n_measurements: usize,
    pub ratio: f64,
    /// Mean final squared relative error over trials that finished.
    pub mean_sq_rel_error: f64,
    /// Standard error of that mean.
    pub stderr: f64,
    pub trials: usize,
    pub failures: usize,
}

#[derive(Clone, Debug)]
pub struct StatErrResult {
    pub points: Vec<StatErrPoint>,
    pub trials: Vec<TrialRecord>,
    pub cv: Vec<CvSelection>,
}

impl StatErrResult {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{STATERR_CSV_HEADER}\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                p.n_measurements, p.ratio, p.mean_sq_rel_error, p.stderr, p.trials, p.failures
            ));
        }
        out
    }

    pub fn trials_csv(&self) -> String {
        trials_csv("staterr", &self.trials)
    }

    /// Least-squares slope of `log(error)` against `log(N)`.
    pub fn loglog_slope(&self) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .points
            .iter()
            .filter(|p| p.mean_sq_rel_error > 0.0 && p.mean_sq_rel_error.is_finite())
            .map(|p| ((p.n_measurements as f64).ln(), p.mean_sq_rel_error.ln()))
            .collect();
        least_squares_slope(&pts)
    }
}

pub(crate) fn least_squares_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Mean squared relative error after the full data-pass budget, per
/// measurement count.
pub fn run_staterr(cfg: &ExperimentConfig) -> Result<StatErrResult> {
    cfg.validate()?;
    if cfg.noise_sigma <= 0.0 {
        return Err(Error::InvalidArgument(
            "the statistical-error experiment needs noise_sigma > 0".into(),
        ));
    }
    let rdp = cfg.setting.rd_prime() as f64;
    let mut result = StatErrResult {
        points: Vec::new(),
        trials: Vec::new(),
        cv: Vec::new(),
    };
    for n_meas in cfg.n_grid.counts(cfg.setting) {
        let (b, m, sel) = schedule(cfg, "staterr", n_meas)?;
        result.cv.extend(sel);
        let runs: Vec<TrialRecord> = run_grid_point(cfg, "staterr", n_meas, b, m, false, false)
            .into_iter()
            .map(|r| r.svrg)
            .collect();
        let ok: Vec<f64> = runs
            .iter()
            .map(|r| r.final_rel_error)
            .filter(|e| e.is_finite())
            .collect();
        let k = ok.len() as f64;
        let mean = ok.iter().sum::<f64>() / k;
        let var = if ok.len() > 1 {
            ok.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (k - 1.0)
        } else {
            0.0
        };
        result.points.push(StatErrPoint {
            n_measurements: n_meas,
            ratio: n_meas as f64 / rdp,
            mean_sq_rel_error: mean,
            stderr: (var / k).sqrt(),
            trials: runs.len(),
            failures: runs.len() - ok.len(),
        });
        result.trials.extend(runs);
    }
    Ok(result)
}
