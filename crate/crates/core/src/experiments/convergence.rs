use super::{median_error, run_grid_point, schedule, trials_csv, CvSelection, ExperimentConfig, TrialRecord};
use crate::error::Result;

pub const CONVERGENCE_CSV_HEADER: &str = "algorithm,N,trial,epoch,data_passes,rel_error";

#[derive(Clone, Debug)]
pub struct ConvergenceResult {
    pub svrg: Vec<TrialRecord>,
    pub gd: Vec<TrialRecord>,
    pub cv: Vec<CvSelection>,
}

impl ConvergenceResult {
    /// Long format: one row per algorithm, trial and trace record.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{CONVERGENCE_CSV_HEADER}\n");
        for (name, recs) in [("svrg", &self.svrg), ("gd", &self.gd)] {
            for rec in recs.iter() {
                let Some(trace) = &rec.trace else { continue };
                for t in &trace.records {
                    out.push_str(&format!(
                        "{name},{},{},{},{},{}\n",
                        rec.n_measurements,
                        rec.trial,
                        t.epoch,
                        t.data_passes,
                        t.rel_error.unwrap_or(f64::NAN)
                    ));
                }
            }
        }
        out
    }

    pub fn trials_csv(&self) -> String {
        let mut out = trials_csv("convergence/svrg", &self.svrg);
        out.push_str(
            trials_csv("convergence/gd", &self.gd)
                .split_once('\n')
                .map_or("", |(_, rest)| rest),
        );
        out
    }

    pub fn median_svrg(&self) -> f64 {
        median_error(&self.svrg)
    }

    pub fn median_gd(&self) -> f64 {
        median_error(&self.gd)
    }
}

/// SVRG and GD from the same initialization at matched data-pass budgets,
/// for every measurement count in the grid.
pub fn run_convergence(cfg: &ExperimentConfig) -> Result<ConvergenceResult> {
    cfg.validate()?;
    let mut result = ConvergenceResult {
        svrg: Vec::new(),
        gd: Vec::new(),
        cv: Vec::new(),
    };
    for n_meas in cfg.n_grid.counts(cfg.setting) {
        let (b, m, sel) = schedule(cfg, "convergence", n_meas)?;
        result.cv.extend(sel);
        for run in run_grid_point(cfg, "convergence", n_meas, b, m, true, true) {
            result.svrg.push(run.svrg);
            result.gd.extend(run.gd);
        }
    }
    Ok(result)
}
