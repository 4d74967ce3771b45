use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{median_error, run_trial, CrossValidation, ExperimentConfig};
use crate::error::{Error, Result};
use crate::rng::derive_seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvCandidate {
    pub batch_size: usize,
    pub inner_iters: usize,
    pub median_error: f64,
}

/// Chosen `(b, m)` for one measurement count, with every candidate scored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvSelection {
    pub n_measurements: usize,
    pub batch_size: usize,
    pub inner_iters: usize,
    pub median_error: f64,
    pub candidates: Vec<CvCandidate>,
}

/// Scores every `(b, m)` candidate by the median final error over held-out
/// seeds (disjoint from the trial seeds) and keeps the best; ties go to the
/// earlier candidate.
pub fn select_by_cv(
    cfg: &ExperimentConfig,
    cv: &CrossValidation,
    tag: &str,
    n_measurements: usize,
) -> Result<CvSelection> {
    let mut candidates = Vec::new();
    for &n in &cv.batch_counts {
        if !n_measurements.is_multiple_of(n) || n == 0 {
            continue;
        }
        let b = n_measurements / n;
        for &mult in &cv.inner_multipliers {
            let m = mult * n;
            let runs: Vec<_> = (0..cv.seeds)
                .into_par_iter()
                .map(|k| {
                    let seed = derive_seed(cfg.master_seed, &format!("{tag}/cv/N={n_measurements}"), k as u64);
                    run_trial(cfg, k, seed, n_measurements, b, m, false, false).svrg
                })
                .collect();
            candidates.push(CvCandidate {
                batch_size: b,
                inner_iters: m,
                median_error: median_error(&runs),
            });
        }
    }
    let best = candidates
        .iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| a.median_error.total_cmp(&b.median_error).then(i.cmp(j)))
        .map(|(_, c)| c.clone())
        .ok_or_else(|| {
            Error::InvalidArgument(format!("no cross-validation batch count divides N = {n_measurements}"))
        })?;
    Ok(CvSelection {
        n_measurements,
        batch_size: best.batch_size,
        inner_iters: best.inner_iters,
        median_error: best.median_error,
        candidates,
    })
}
