//! Singular value decompositions.
//!
//! Two routes: one-sided Jacobi for small dense matrices (exact up to
//! rounding) and seeded subspace iteration for the leading `k` triplets of
//! larger ones. Power iteration provides the spectral norm.

use super::matrix::dot;
use super::qr::thin_q;
use super::Matrix;
use crate::error::{Error, Result};
use crate::rng::{gaussian_vec, stream};

/// Extra basis vectors carried by subspace iteration beyond the requested rank.
pub const OVERSAMPLING: usize = 4;
pub const DEFAULT_SVD_TOL: f64 = 1e-10;
pub const DEFAULT_SVD_MAX_ITER: usize = 2000;
pub const DEFAULT_SPECTRAL_TOL: f64 = 1e-12;
const SPECTRAL_MAX_ITER: usize = 100_000;
const JACOBI_MAX_SWEEPS: usize = 80;
/// Fixed seed of the subspace-iteration start block.
const START_SEED: u64 = 0x5eed_57d0;

/// Leading singular triplets: `a ≈ u · diag(s) · vᵀ`.
#[derive(Clone, Debug)]
pub struct SvdTriplet {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub v: Matrix,
}

impl SvdTriplet {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    /// `u · diag(s) · vᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        self.u
            .scale_columns(&self.s)
            .matmul_t(&self.v)
            .expect("triplet factors have matching rank")
    }

    /// Makes the first non-negligible entry of every left vector positive,
    /// flipping the matching right vector with it.
    fn normalize_signs(&mut self) {
        for j in 0..self.s.len() {
            let col = self.u.column(j);
            let first = col.iter().copied().find(|x| x.abs() > 1e-14);
            if matches!(first, Some(x) if x < 0.0) {
                let flipped: Vec<f64> = col.iter().map(|x| -x).collect();
                self.u.set_column(j, &flipped);
                let vcol: Vec<f64> = self.v.column(j).iter().map(|x| -x).collect();
                self.v.set_column(j, &vcol);
            }
        }
    }
}

/// Thin SVD by one-sided (Hestenes) Jacobi rotations.
///
/// Returns `min(m, n)` triplets sorted non-increasingly. Left vectors for
/// zero singular values are completed to an orthonormal set.
pub fn jacobi_svd(a: &Matrix) -> Result<SvdTriplet> {
    let (m, n) = a.shape();
    if m < n {
        let t = jacobi_svd(&a.transpose())?;
        return Ok(SvdTriplet { u: t.v, s: t.s, v: t.u });
    }

    // work column-major: cols[j] is column j of a
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let mut vcols: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    // columns below this norm are rounding noise of a rank-deficient input
    let negligible = f64::EPSILON * a.frobenius_norm();
    let mut converged = n < 2;
    let mut off = 0.0;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        off = 0.0_f64;
        for i in 0..n - 1 {
            for j in i + 1..n {
                let alpha = dot(&cols[i], &cols[i]);
                let beta = dot(&cols[j], &cols[j]);
                let gamma = dot(&cols[i], &cols[j]);
                let (na, nb) = (alpha.sqrt(), beta.sqrt());
                let scale = na * nb;
                if na <= negligible || nb <= negligible || gamma.abs() <= f64::EPSILON * scale {
                    continue;
                }
                off = off.max(gamma.abs() / scale);
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut cols, i, j, c, s);
                rotate(&mut vcols, i, j, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NotConverged {
            what: "jacobi_svd",
            iterations: JACOBI_MAX_SWEEPS,
            residual: off,
        });
    }

    let norms: Vec<f64> = cols.iter().map(|c| dot(c, c).sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));

    let smax = norms.iter().copied().fold(0.0, f64::max);
    let cutoff = smax * f64::EPSILON * (m as f64);
    let mut u = Matrix::zeros(m, n);
    let mut v = Matrix::zeros(n, n);
    let mut s = Vec::with_capacity(n);
    let mut missing = Vec::new();
    for (dst, &src) in order.iter().enumerate() {
        let sigma = norms[src];
        if sigma > cutoff && sigma > 0.0 {
            let ucol: Vec<f64> = cols[src].iter().map(|x| x / sigma).collect();
            u.set_column(dst, &ucol);
            s.push(sigma);
        } else {
            missing.push(dst);
            s.push(0.0);
        }
        v.set_column(dst, &vcols[src]);
    }
    complete_orthonormal(&mut u, &missing);

    let mut out = SvdTriplet { u, s, v };
    out.normalize_signs();
    Ok(out)
}

fn rotate(cols: &mut [Vec<f64>], i: usize, j: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(j);
    for (x, y) in lo[i].iter_mut().zip(hi[0].iter_mut()) {
        let (a, b) = (*x, *y);
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

/// Fills the listed columns of `u` with unit vectors orthogonal to all others.
fn complete_orthonormal(u: &mut Matrix, missing: &[usize]) {
    if missing.is_empty() {
        return;
    }
    let m = u.rows();
    let mut basis: Vec<Vec<f64>> = (0..u.cols())
        .filter(|j| !missing.contains(j))
        .map(|j| u.column(j))
        .collect();
    let mut candidate = 0;
    for &j in missing {
        loop {
            let mut e: Vec<f64> = (0..m).map(|i| if i == candidate { 1.0 } else { 0.0 }).collect();
            candidate += 1;
            // two passes of Gram-Schmidt
            for _ in 0..2 {
                for b in &basis {
                    let p = dot(&e, b);
                    e.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
                }
            }
            let norm = dot(&e, &e).sqrt();
            if norm > 1e-8 {
                e.iter_mut().for_each(|x| *x /= norm);
                u.set_column(j, &e);
                basis.push(e);
                break;
            }
            assert!(candidate < m, "cannot complete orthonormal basis");
        }
    }
}

/// Leading `k` singular triplets of `a` by seeded subspace iteration.
///
/// Works on a block of `k + OVERSAMPLING` vectors (capped at `min(rows, cols)`)
/// with a Rayleigh-Ritz step each iteration. Stops once successive estimates of
/// the top `k` singular values change by at most `tol` relative to `σ₁` and the
/// Ritz residual `‖A·V − U·diag(s)‖_F / σ₁` is at most `tol` as well.
pub fn truncated_svd(a: &Matrix, k: usize, tol: f64, max_iter: usize) -> Result<SvdTriplet> {
    let (m, n) = a.shape();
    let full = m.min(n);
    if k == 0 || k > full {
        return Err(Error::InvalidArgument(format!(
            "truncated_svd: rank {k} must lie in 1..={full}"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "truncated_svd: tolerance must be positive, got {tol}"
        )));
    }
    if !a.is_finite() {
        return Err(Error::NonFinite {
            location: "truncated_svd input".into(),
        });
    }
    let block = (k + OVERSAMPLING).min(full);
    // iterate on a unit-scaled copy so squared norms cannot overflow
    let scale = a.max_abs();
    if scale == 0.0 {
        let u = Matrix::from_fn(m, k, |i, j| if i == j { 1.0 } else { 0.0 });
        let v = Matrix::from_fn(n, k, |i, j| if i == j { 1.0 } else { 0.0 });
        return Ok(finish(u, vec![0.0; k], v));
    }
    let scaled = a.scale(1.0 / scale);
    let a = &scaled;

    let mut rng = stream(START_SEED, "truncated_svd");
    let omega = Matrix::new(n, block, gaussian_vec(&mut rng, n * block))?;
    let mut q = thin_q(&a.matmul(&omega)?);
    let mut prev: Option<Vec<f64>> = None;
    let mut last = f64::INFINITY;

    for _ in 0..max_iter {
        let w = thin_q(&a.t_matmul(&q)?);
        q = thin_q(&a.matmul(&w)?);
        let b = q.t_matmul(a)?;
        let small = jacobi_svd(&b)?;
        let sigma1 = small.s[0];

        let u = q.matmul(&small.u.leading_columns(k))?;
        let v = small.v.leading_columns(k);
        let s = small.s[..k].to_vec();
        if sigma1 <= f64::MIN_POSITIVE {
            return Ok(finish(u, s.iter().map(|x| x * scale).collect(), v));
        }

        let residual = a.matmul(&v)?.sub(&u.scale_columns(&s))?.frobenius_norm() / sigma1;
        let change = match &prev {
            Some(p) => s.iter().zip(p).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / sigma1,
            None => f64::INFINITY,
        };
        last = change.max(residual);
        if last <= tol {
            return Ok(finish(u, s.iter().map(|x| x * scale).collect(), v));
        }
        prev = Some(s);
    }
    Err(Error::NotConverged {
        what: "truncated_svd",
        iterations: max_iter,
        residual: last,
    })
}

fn finish(u: Matrix, s: Vec<f64>, v: Matrix) -> SvdTriplet {
    let mut t = SvdTriplet { u, s, v };
    t.normalize_signs();
    t
}

/// `truncated_svd` with the default tolerance and iteration cap.
pub fn top_k_svd(a: &Matrix, k: usize) -> Result<SvdTriplet> {
    truncated_svd(a, k, DEFAULT_SVD_TOL, DEFAULT_SVD_MAX_ITER)
}

/// Best rank-`k` approximation `P_k(a)`.
pub fn best_rank_approx(a: &Matrix, k: usize) -> Result<Matrix> {
    Ok(top_k_svd(a, k)?.reconstruct())
}

pub(crate) fn matvec(a: &Matrix, x: &[f64]) -> Vec<f64> {
    (0..a.rows()).map(|i| dot(a.row(i), x)).collect()
}

pub(crate) fn t_matvec(a: &Matrix, y: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.cols()];
    for (i, &yi) in y.iter().enumerate() {
        out.iter_mut().zip(a.row(i)).for_each(|(o, x)| *o += yi * x);
    }
    out
}

/// Largest singular value by power iteration on `aᵀa`.
///
/// Stops when successive estimates differ by at most `tol` relatively.
pub fn spectral_norm(a: &Matrix, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "spectral_norm: tolerance must be positive, got {tol}"
        )));
    }
    if a.max_abs() == 0.0 {
        return Ok(0.0);
    }
    let mut rng = stream(START_SEED, "spectral_norm");
    let mut x = gaussian_vec(&mut rng, a.cols());
    normalize(&mut x);
    let mut prev = 0.0;
    let mut change = f64::INFINITY;
    for it in 0..SPECTRAL_MAX_ITER {
        let y = matvec(a, &x);
        let sigma = dot(&y, &y).sqrt();
        if !sigma.is_finite() {
            return Err(Error::NonFinite {
                location: "spectral_norm".into(),
            });
        }
        let mut z = t_matvec(a, &y);
        if normalize(&mut z) == 0.0 {
            return Ok(sigma);
        }
        x = z;
        if it > 0 {
            change = (sigma - prev).abs();
            if change <= tol * sigma {
                // one more product with the refined vector
                let y = matvec(a, &x);
                return Ok(dot(&y, &y).sqrt().max(sigma));
            }
        }
        prev = sigma;
    }
    Err(Error::NotConverged {
        what: "spectral_norm",
        iterations: SPECTRAL_MAX_ITER,
        residual: change,
    })
}

fn normalize(x: &mut [f64]) -> f64 {
    let n = dot(x, x).sqrt();
    if n > 0.0 {
        x.iter_mut().for_each(|v| *v /= n);
    }
    n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{gaussian_matrix, random_orthonormal};

    fn orth_err(q: &Matrix) -> f64 {
        q.t_matmul(q)
            .unwrap()
            .sub(&Matrix::identity(q.cols()))
            .unwrap()
            .frobenius_norm()
    }

    #[test]
    fn jacobi_reconstructs_square_tall_and_wide() {
        let mut rng = stream(11, "svd");
        for &(m, n) in &[(4, 4), (7, 3), (3, 6), (1, 5), (5, 1)] {
            let a = gaussian_matrix(&mut rng, m, n);
            let t = jacobi_svd(&a).unwrap();
            assert!(t.reconstruct().rel_diff(&a).unwrap() < 1e-13, "{m}x{n}");
            assert!(orth_err(&t.u) < 1e-12 && orth_err(&t.v) < 1e-12);
            assert!(t.s.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn jacobi_rank_two_square_with_zero_row() {
        let a = Matrix::from_rows(&[
            [-0.467070170913079, 1.078834506439875, 0.38675345029966646],
            [-0.09458307169640215, -0.031152609036580098, -0.02779189737304349],
            [0.0, 0.0, 0.0],
        ])
        .unwrap();
        let t = jacobi_svd(&a).unwrap();
        assert!(t.reconstruct().rel_diff(&a).unwrap() < 1e-13);
        assert!(t.s[2] < 1e-15 * t.s[0]);
        assert!(orth_err(&t.u) < 1e-12 && orth_err(&t.v) < 1e-12);
    }

    #[test]
    fn jacobi_handles_rank_deficiency() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0], [0.0, 0.0]]).unwrap();
        let t = jacobi_svd(&a).unwrap();
        assert!((t.s[0] - 25.0_f64.sqrt()).abs() < 1e-13);
        assert_eq!(t.s[1], 0.0);
        assert!(orth_err(&t.u) < 1e-12);
        let z = jacobi_svd(&Matrix::zeros(3, 2)).unwrap();
        assert_eq!(z.s, vec![0.0, 0.0]);
        assert!(orth_err(&z.u) < 1e-12);
    }

    #[test]
    fn known_triplets_rank_one() {
        let mut rng = stream(12, "svd");
        let u0 = random_orthonormal(&mut rng, 8, 2);
        let v0 = random_orthonormal(&mut rng, 6, 2);
        let a = u0.scale_columns(&[5.0, 2.0]).matmul_t(&v0).unwrap();
        let t = truncated_svd(&a, 1, 1e-12, 500).unwrap();
        assert!((t.s[0] - 5.0).abs() < 1e-10);
        let c = dot(&t.u.column(0), &u0.column(0)).abs();
        assert!((1.0 - c).abs() < 1e-8);
    }

    #[test]
    fn identity_singular_values() {
        let t = top_k_svd(&Matrix::identity(3), 3).unwrap();
        for s in &t.s {
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_rank_reconstruction() {
        let mut rng = stream(13, "svd");
        let a = gaussian_matrix(&mut rng, 9, 2)
            .matmul(&gaussian_matrix(&mut rng, 2, 7))
            .unwrap();
        let t = top_k_svd(&a, 2).unwrap();
        assert!(t.reconstruct().sub(&a).unwrap().frobenius_norm() <= 1e-8 * a.frobenius_norm());
    }

    #[test]
    fn left_vectors_have_positive_leading_entry() {
        let mut rng = stream(14, "svd");
        let a = gaussian_matrix(&mut rng, 6, 5);
        let t = top_k_svd(&a, 3).unwrap();
        for j in 0..3 {
            let col = t.u.column(j);
            assert!(col.iter().find(|x| x.abs() > 1e-14).unwrap() > &0.0);
        }
    }

    #[test]
    fn truncated_svd_rejects_bad_rank() {
        let a = Matrix::identity(3);
        assert!(truncated_svd(&a, 0, 1e-10, 10).is_err());
        assert!(truncated_svd(&a, 4, 1e-10, 10).is_err());
        assert!(truncated_svd(&a, 1, 0.0, 10).is_err());
    }

    #[test]
    fn truncated_svd_reports_non_convergence() {
        let mut rng = stream(15, "svd");
        let a = gaussian_matrix(&mut rng, 30, 30);
        match truncated_svd(&a, 3, 1e-15, 1) {
            Err(Error::NotConverged { iterations, .. }) => assert_eq!(iterations, 1),
            other => panic!("expected NotConverged, got {other:?}"),
        }
    }

    #[test]
    fn spectral_norm_cases() {
        let d = Matrix::from_diag(&[3.0, 1.0]);
        assert!((spectral_norm(&d, 1e-12).unwrap() - 3.0).abs() < 1e-10);
        assert_eq!(spectral_norm(&Matrix::zeros(3, 4), 1e-12).unwrap(), 0.0);
        let mut rng = stream(16, "svd");
        let a = gaussian_matrix(&mut rng, 6, 4);
        let s1 = top_k_svd(&a, 1).unwrap().s[0];
        assert!((spectral_norm(&a, 1e-14).unwrap() - s1).abs() < 1e-8);
    }
}
