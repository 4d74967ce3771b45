use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::Matrix;
use crate::objective::{grad_full, objective_full, FactorPair};
use crate::sensing::SensingDataset;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradcheckReport {
    /// `‖g_fd − g‖_F / ‖g‖_F` over the stacked gradient.
    pub rel_deviation: f64,
    pub grad_norm: f64,
    pub step: f64,
}

/// Central finite differences of the full objective against the analytic gradient.
pub fn gradcheck(ds: &SensingDataset, z: &FactorPair, step: f64) -> Result<GradcheckReport> {
    let analytic = grad_full(ds, z)?.stacked();
    let base = z.stacked();
    let d1 = z.d1();
    let mut fd = Matrix::zeros(base.rows(), base.cols());
    for i in 0..base.rows() {
        for j in 0..base.cols() {
            let mut plus = base.clone();
            plus[(i, j)] += step;
            let mut minus = base.clone();
            minus[(i, j)] -= step;
            let fp = objective_full(ds, &FactorPair::from_stacked(&plus, d1)?)?;
            let fm = objective_full(ds, &FactorPair::from_stacked(&minus, d1)?)?;
            fd[(i, j)] = (fp - fm) / (2.0 * step);
        }
    }
    let grad_norm = analytic.frobenius_norm();
    let diff = fd.sub(&analytic)?.frobenius_norm();
    Ok(GradcheckReport {
        rel_deviation: if grad_norm > 0.0 { diff / grad_norm } else { diff },
        grad_norm,
        step,
    })
}
