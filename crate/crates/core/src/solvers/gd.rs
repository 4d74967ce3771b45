use super::{check_finite, Reference, SolveTrace};
use crate::error::{Error, Result};
use crate::objective::{grad_full, FactorPair};
use crate::sensing::SensingDataset;

/// Full-gradient descent `Z ← Z − η∇f̃(Z)` for `iterations` steps.
///
/// Each step is one effective data pass; the trace has one record per step.
pub fn gd_solve(
    ds: &SensingDataset,
    z0: &FactorPair,
    eta: f64,
    iterations: usize,
    reference: Option<&Reference>,
) -> Result<(FactorPair, SolveTrace)> {
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "step size must be finite and non-negative, got {eta}"
        )));
    }
    z0.check_against(ds, "gd_solve")?;
    let mut trace = SolveTrace::default();
    trace.record(ds, z0, 0, 0.0, reference)?;
    let mut z = z0.clone();
    for t in 1..=iterations {
        let g = grad_full(ds, &z)?;
        z.u.axpy(-eta, &g.gu)?;
        z.v.axpy(-eta, &g.gv)?;
        check_finite(&z, || format!("gradient step {t}"))?;
        trace.record(ds, &z, t, t as f64, reference)?;
    }
    Ok((z, trace))
}
