use serde::{Deserialize, Serialize};

use super::{distance, holds_with_slack};
use crate::error::{Error, Result};
use crate::linalg::{jacobi_svd, top_k_svd, Matrix};
use crate::objective::FactorPair;

/// Slack for the deterministic inequalities.
pub const LEMMA_SLACK: f64 = 1e-10;

/// Relative threshold below which a singular value counts as zero.
const RANK_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaA1Report {
    /// `⟨Z̃Z̃ᵀZ, H⟩`.
    pub lhs: f64,
    /// `½‖Z̃ᵀZ‖²_F − ½‖Z̃ᵀZ‖_F‖H‖²_F`.
    pub rhs: f64,
    pub holds: bool,
}

/// Regularizer curvature inequality with `Z̃ = [U; −V]` and `H = Z − Z*R`.
///
/// The inequality presumes a balanced reference (`Z̃*ᵀZ* = 0`).
pub fn check_lemma_a1(z: &FactorPair, zstar: &FactorPair) -> Result<LemmaA1Report> {
    let align = distance(z, zstar)?;
    let zs = z.stacked();
    let zt = z.stacked_flipped();
    let cross = zt.t_matmul(&zs)?;
    let lhs = zt.matmul(&cross)?.dot(&align.h)?;
    let c = cross.frobenius_norm();
    let rhs = 0.5 * c * c - 0.5 * c * align.dist * align.dist;
    Ok(LemmaA1Report {
        lhs,
        rhs,
        holds: holds_with_slack(rhs, lhs, LEMMA_SLACK),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaB3B4Report {
    /// `d²(Z₁, Z₂)`.
    pub b3_lhs: f64,
    /// `‖Z₁Z₁ᵀ − Z₂Z₂ᵀ‖²_F / (2(√2−1)σ²_r(Z₂))`.
    pub b3_rhs: f64,
    /// Whether `d(Z₁, Z₂) ≤ ‖Z₂‖₂/4`.
    pub b4_applicable: bool,
    /// `‖Z₁Z₁ᵀ − Z₂Z₂ᵀ‖_F`.
    pub b4_lhs: f64,
    /// `(9/4)‖Z₂‖₂·d(Z₁, Z₂)`.
    pub b4_rhs: f64,
    pub holds: bool,
}

/// Distance versus lifted-product bounds for stacked factors.
pub fn check_lemma_b3_b4(z1: &FactorPair, z2: &FactorPair) -> Result<LemmaB3B4Report> {
    let d = distance(z1, z2)?.dist;
    let s1 = z1.stacked();
    let s2 = z2.stacked();
    let svd = jacobi_svd(&s2)?;
    let r = z2.rank();
    let (top, sigma_r) = (svd.s[0], svd.s[r - 1]);
    if !(sigma_r > RANK_TOL * top) {
        return Err(Error::RankDeficient {
            op: "check_lemma_b3_b4",
            sigma_r,
        });
    }
    let lifted = s1.matmul_t(&s1)?.sub(&s2.matmul_t(&s2)?)?;
    let lifted_sq = lifted.frobenius_norm_sq();
    let b3_lhs = d * d;
    let b3_rhs = lifted_sq / (2.0 * (2f64.sqrt() - 1.0) * sigma_r * sigma_r);
    let b4_applicable = d <= top / 4.0;
    let b4_lhs = lifted_sq.sqrt();
    let b4_rhs = 2.25 * top * d;
    let holds = holds_with_slack(b3_lhs, b3_rhs, LEMMA_SLACK)
        && (!b4_applicable || holds_with_slack(b4_lhs, b4_rhs, LEMMA_SLACK));
    Ok(LemmaB3B4Report {
        b3_lhs,
        b3_rhs,
        b4_applicable,
        b4_lhs,
        b4_rhs,
        holds,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaB2Report {
    /// Whether `‖M′ − M‖₂ ≤ σ_r(M)/2`.
    pub applicable: bool,
    /// `d²` between the balanced factors of `M′` and `M`.
    pub lhs: f64,
    /// `(2/(√2−1))·‖M′ − M‖²_F/σ_r(M)`.
    pub rhs: f64,
    pub holds: bool,
}

fn require_rank(svd_s: &[f64], r: usize, op: &'static str) -> Result<()> {
    let top = svd_s[0];
    if !(svd_s[r - 1] > RANK_TOL * top) {
        return Err(Error::RankDeficient {
            op,
            sigma_r: svd_s[r - 1],
        });
    }
    if let Some(&next) = svd_s.get(r) {
        if next > RANK_TOL * top {
            return Err(Error::InvalidArgument(format!(
                "{op}: matrix has rank above {r} (sigma_{} = {next:e})",
                r + 1
            )));
        }
    }
    Ok(())
}

/// Closeness of balanced factorizations of two rank-`r` matrices.
pub fn check_lemma_b2(m: &Matrix, m_prime: &Matrix, r: usize) -> Result<LemmaB2Report> {
    if m.shape() != m_prime.shape() {
        return Err(Error::dims(
            "check_lemma_b2",
            format!("{}x{}", m.rows(), m.cols()),
            format!("{}x{}", m_prime.rows(), m_prime.cols()),
        ));
    }
    let k = (r + 1).min(m.rows().min(m.cols()));
    let svd = top_k_svd(m, k)?;
    let svd_prime = top_k_svd(m_prime, k)?;
    require_rank(&svd.s, r, "check_lemma_b2")?;
    require_rank(&svd_prime.s, r, "check_lemma_b2")?;
    let sigma_r = svd.s[r - 1];

    let balanced = |svd: &crate::linalg::SvdTriplet| {
        let root: Vec<f64> = svd.s[..r].iter().map(|s| s.sqrt()).collect();
        FactorPair {
            u: svd.u.leading_columns(r).scale_columns(&root),
            v: svd.v.leading_columns(r).scale_columns(&root),
        }
    };
    let d = distance(&balanced(&svd_prime), &balanced(&svd))?.dist;
    let diff = m_prime.sub(m)?;
    let applicable = crate::linalg::spectral_norm(&diff, crate::linalg::DEFAULT_SPECTRAL_TOL)? <= sigma_r / 2.0;
    let lhs = d * d;
    let rhs = 2.0 / (2f64.sqrt() - 1.0) * diff.frobenius_norm_sq() / sigma_r;
    Ok(LemmaB2Report {
        applicable,
        lhs,
        rhs,
        holds: !applicable || holds_with_slack(lhs, rhs, LEMMA_SLACK),
    })
}
