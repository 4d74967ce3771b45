use rand::Rng;

use super::{check_finite, OutputPolicy, Reference, SolveTrace, SolverConfig};
use crate::error::{Error, Result};
use crate::objective::{grad_component, grad_loss_component, grad_loss_full, FactorPair, GradientPair};
use crate::rng;
use crate::sensing::SensingDataset;

/// State handed to an observer at the start of every epoch.
pub struct EpochStart<'a> {
    pub epoch: usize,
    pub snapshot: &'a FactorPair,
    /// Full loss gradient at the snapshot (no regularizer term).
    pub snapshot_grad: &'a GradientPair,
}

/// `∇fᵢ(Z) − ∇ℓᵢ(Z̃) + G̃` for component `i`.
pub fn variance_reduced_direction(
    ds: &SensingDataset,
    z: &FactorPair,
    snapshot: &FactorPair,
    snapshot_grad: &GradientPair,
    i: usize,
) -> Result<GradientPair> {
    let mut dir = grad_component(ds, z, i)?;
    dir.axpy(-1.0, &grad_loss_component(ds, snapshot, i)?)?;
    dir.axpy(1.0, snapshot_grad)?;
    Ok(dir)
}

/// Stochastic variance-reduced gradient descent on the regularized objective.
///
/// Each epoch takes a snapshot `Z̃`, computes the full loss gradient there,
/// then runs `m` steps `Z ← Z − η(∇f_{iₜ}(Z) − ∇ℓ_{iₜ}(Z̃) + G̃)` with `iₜ`
/// drawn uniformly with replacement from the `n` batches. One epoch costs
/// `1 + m·b/N` effective data passes.
pub fn svrg_solve(
    ds: &SensingDataset,
    z0: &FactorPair,
    cfg: &SolverConfig,
    reference: Option<&Reference>,
) -> Result<(FactorPair, SolveTrace)> {
    svrg_solve_observed(ds, z0, cfg, reference, |_| {})
}

/// [`svrg_solve`] with a callback invoked at the start of every epoch.
pub fn svrg_solve_observed(
    ds: &SensingDataset,
    z0: &FactorPair,
    cfg: &SolverConfig,
    reference: Option<&Reference>,
    mut observer: impl FnMut(&EpochStart<'_>),
) -> Result<(FactorPair, SolveTrace)> {
    cfg.validate()?;
    if ds.is_empty() {
        return Err(Error::InvalidArgument("empty dataset".into()));
    }
    z0.check_against(ds, "svrg_solve")?;

    let n = ds.num_batches();
    let m = cfg.inner_iters;
    let epoch_passes = 1.0 + (m * ds.batch_size()) as f64 / ds.len() as f64;
    let mut rng = rng::stream(cfg.seed, "svrg");

    let mut trace = SolveTrace::default();
    trace.record(ds, z0, 0, 0.0, reference)?;
    let mut snapshot = z0.clone();

    for epoch in 1..=cfg.epochs {
        let snapshot_grad = grad_loss_full(ds, &snapshot)?;
        observer(&EpochStart {
            epoch,
            snapshot: &snapshot,
            snapshot_grad: &snapshot_grad,
        });
        let capture_at = match cfg.output_policy {
            OutputPolicy::RandomT => rng.random_range(0..m),
            OutputPolicy::LastIterate => m,
        };

        let mut z = snapshot.clone();
        let mut captured = None;
        for t in 0..m {
            if t == capture_at {
                captured = Some(z.clone());
            }
            let i = rng.random_range(0..n);
            let dir = variance_reduced_direction(ds, &z, &snapshot, &snapshot_grad, i)?;
            z.u.axpy(-cfg.eta, &dir.gu)?;
            z.v.axpy(-cfg.eta, &dir.gv)?;
            check_finite(&z, || format!("epoch {epoch}, inner step {t}"))?;
        }
        snapshot = captured.unwrap_or(z);

        trace.record(ds, &snapshot, epoch, epoch as f64 * epoch_passes, reference)?;
        if let Some(tol) = cfg.tol_stop {
            let reached = match trace.last().and_then(|r| r.rel_error) {
                Some(err) => err <= tol,
                None => crate::objective::grad_full(ds, &snapshot)?.frobenius_norm() <= tol,
            };
            if reached {
                break;
            }
        }
    }
    Ok((snapshot, trace))
}
