//! Synthetic experiments: convergence curves, recovery phase transition and
//! statistical-error scaling, each written as CSV.

mod config;
mod convergence;
mod cv;
mod phase;
mod staterr;

pub use config::{CrossValidation, ExperimentConfig, GdSettings, InitSettings, NGrid, Setting, SolverSettings};
pub use convergence::{run_convergence, ConvergenceResult, CONVERGENCE_CSV_HEADER};
pub use cv::{select_by_cv, CvCandidate, CvSelection};
pub use phase::{run_phase, PhasePoint, PhaseResult, PHASE_CSV_HEADER};
pub use staterr::{run_staterr, StatErrPoint, StatErrResult, STATERR_CSV_HEADER};

use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::error::Result;
use crate::linalg::Matrix;
use crate::objective::FactorPair;
use crate::rng::{derive_seed, gaussian_matrix, stream};
use crate::sensing::{generate_dataset, EnsembleSpec, SensingDataset};
use crate::solvers::{
    default_eta, gd_solve, init_projected_gd, svrg_solve, InitConfig, Reference, SolveTrace, SolverConfig,
};

/// Header of the per-trial CSV written next to every experiment's main output.
pub const TRIALS_CSV_HEADER: &str = "experiment,trial,seed,d1,d2,r,N,b,m,eta,final_rel_error,recovered,error";

/// One solver run inside an experiment.
#[derive(Clone, Debug)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub d1: usize,
    pub d2: usize,
    pub r: usize,
    pub n_measurements: usize,
    pub batch_size: usize,
    pub inner_iters: usize,
    pub eta: f64,
    /// `NaN` when the run failed.
    pub final_rel_error: f64,
    pub recovered: bool,
    /// Kept in memory only so written outputs stay byte-identical.
    pub wall_time: Duration,
    pub trace: Option<SolveTrace>,
    pub error: Option<String>,
}

impl TrialRecord {
    fn csv_row(&self, experiment: &str) -> String {
        format!(
            "{experiment},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            self.trial,
            self.seed,
            self.d1,
            self.d2,
            self.r,
            self.n_measurements,
            self.batch_size,
            self.inner_iters,
            self.eta,
            self.final_rel_error,
            self.recovered,
            self.error.as_deref().unwrap_or("").replace(',', ";"),
        )
    }
}

pub fn trials_csv(experiment: &str, records: &[TrialRecord]) -> String {
    let mut out = format!("{TRIALS_CSV_HEADER}\n");
    for rec in records {
        out.push_str(&rec.csv_row(experiment));
    }
    out
}

/// Ground truth and dataset of one trial.
pub struct TrialInstance {
    pub xstar: Matrix,
    pub dataset: SensingDataset,
}

/// `X* = U*V*ᵀ` with standard Gaussian factors and its measurements.
pub fn trial_instance(
    cfg: &ExperimentConfig,
    n_measurements: usize,
    batch_size: usize,
    seed: u64,
) -> Result<TrialInstance> {
    let (d1, d2, r) = cfg.setting.dims();
    let mut rng = stream(seed, "experiment/xstar");
    let ustar = gaussian_matrix(&mut rng, d1, r);
    let vstar = gaussian_matrix(&mut rng, d2, r);
    let xstar = ustar.matmul_t(&vstar)?;
    let spec = EnsembleSpec {
        kind: cfg.ensemble,
        d1,
        d2,
    };
    let dataset = generate_dataset(
        spec,
        &xstar,
        n_measurements,
        batch_size,
        cfg.noise(),
        derive_seed(seed, "dataset", 0),
    )?;
    Ok(TrialInstance { xstar, dataset })
}

/// Output of both algorithms on one instance.
pub(crate) struct PairedRun {
    pub svrg: TrialRecord,
    pub gd: Option<TrialRecord>,
}

/// Initializes, then runs SVRG (and optionally GD at the same data-pass
/// budget) with batch size `b` and `m` inner iterations.
#[allow(clippy::too_many_arguments)]
pub(crate) fn run_trial(
    cfg: &ExperimentConfig,
    trial: usize,
    seed: u64,
    n_measurements: usize,
    batch_size: usize,
    inner_iters: usize,
    with_gd: bool,
    keep_trace: bool,
) -> PairedRun {
    let (d1, d2, r) = cfg.setting.dims();
    let blank = |inner: usize| TrialRecord {
        trial,
        seed,
        d1,
        d2,
        r,
        n_measurements,
        batch_size,
        inner_iters: inner,
        eta: f64::NAN,
        final_rel_error: f64::NAN,
        recovered: false,
        wall_time: Duration::ZERO,
        trace: None,
        error: None,
    };
    let mut svrg_rec = blank(inner_iters);
    let mut gd_rec = with_gd.then(|| blank(0));

    let prepared = (|| -> Result<(TrialInstance, FactorPair, Reference)> {
        let inst = trial_instance(cfg, n_measurements, batch_size, seed)?;
        let z0 = init_projected_gd(
            &inst.dataset,
            &InitConfig {
                tau: cfg.init.tau,
                iterations: cfg.init.iterations,
                rank: r,
            },
        )?;
        let reference = Reference::new(inst.xstar.clone(), r)?;
        Ok((inst, z0, reference))
    })();
    let (inst, z0, reference) = match prepared {
        Ok(p) => p,
        Err(e) => {
            svrg_rec.error = Some(e.to_string());
            if let Some(g) = gd_rec.as_mut() {
                g.error = Some(e.to_string());
            }
            return PairedRun {
                svrg: svrg_rec,
                gd: gd_rec,
            };
        }
    };
    let ds = &inst.dataset;

    let passes_per_epoch = 1.0 + (inner_iters * batch_size) as f64 / n_measurements as f64;
    let epochs = ((cfg.solver.data_passes / passes_per_epoch).floor() as usize).max(1);

    let start = Instant::now();
    let outcome = default_eta(&z0, cfg.solver.eta_scale).and_then(|eta| {
        svrg_rec.eta = eta;
        let scfg = SolverConfig {
            eta,
            inner_iters,
            epochs,
            output_policy: cfg.solver.output_policy,
            seed: derive_seed(seed, "svrg", 0),
            tol_stop: cfg.solver.tol_stop,
        };
        svrg_solve(ds, &z0, &scfg, Some(&reference))
    });
    svrg_rec.wall_time = start.elapsed();
    finish(&mut svrg_rec, outcome, cfg.recovery_threshold, keep_trace);

    if let Some(g) = gd_rec.as_mut() {
        let iterations = (epochs as f64 * passes_per_epoch).floor() as usize;
        let start = Instant::now();
        let outcome = default_eta(&z0, cfg.gd.eta_scale).and_then(|eta| {
            g.eta = eta;
            gd_solve(ds, &z0, eta, iterations, Some(&reference))
        });
        g.wall_time = start.elapsed();
        finish(g, outcome, cfg.recovery_threshold, keep_trace);
    }
    PairedRun {
        svrg: svrg_rec,
        gd: gd_rec,
    }
}

fn finish(rec: &mut TrialRecord, outcome: Result<(FactorPair, SolveTrace)>, threshold: f64, keep_trace: bool) {
    match outcome {
        Ok((_, trace)) => {
            rec.final_rel_error = trace.final_rel_error().unwrap_or(f64::NAN);
            rec.recovered = rec.final_rel_error <= threshold;
            if keep_trace {
                rec.trace = Some(trace);
            }
        }
        Err(e) => rec.error = Some(e.to_string()),
    }
}

/// Runs `trials` independent trials at one grid point in parallel; results
/// come back in trial order.
pub(crate) fn run_grid_point(
    cfg: &ExperimentConfig,
    tag: &str,
    n_measurements: usize,
    batch_size: usize,
    inner_iters: usize,
    with_gd: bool,
    keep_trace: bool,
) -> Vec<PairedRun> {
    (0..cfg.trials)
        .into_par_iter()
        .map(|k| {
            let seed = derive_seed(cfg.master_seed, &format!("{tag}/N={n_measurements}"), k as u64);
            run_trial(
                cfg,
                k,
                seed,
                n_measurements,
                batch_size,
                inner_iters,
                with_gd,
                keep_trace,
            )
        })
        .collect()
}

/// Batch size and inner iterations for `n_measurements`: cross-validated when
/// configured, otherwise `N / num_batches` and `inner_multiplier · n`.
pub(crate) fn schedule(
    cfg: &ExperimentConfig,
    tag: &str,
    n_measurements: usize,
) -> Result<(usize, usize, Option<CvSelection>)> {
    if let Some(cv) = &cfg.cross_validation {
        let sel = select_by_cv(cfg, cv, tag, n_measurements)?;
        return Ok((sel.batch_size, sel.inner_iters, Some(sel)));
    }
    let n = cfg.num_batches;
    if !n_measurements.is_multiple_of(n) || n == 0 {
        return Err(crate::Error::InvalidArgument(format!(
            "{n} batches do not evenly divide N = {n_measurements}"
        )));
    }
    Ok((n_measurements / n, cfg.solver.inner_multiplier * n, None))
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(|a, b| a.total_cmp(b));
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}

/// Median of finite values, treating failures as `+∞`.
pub fn median_error(records: &[TrialRecord]) -> f64 {
    let mut v: Vec<f64> = records
        .iter()
        .map(|r| {
            if r.final_rel_error.is_finite() {
                r.final_rel_error
            } else {
                f64::INFINITY
            }
        })
        .collect();
    median(&mut v)
}
