//! Householder QR, used to orthonormalize bases in subspace iteration.

use super::Matrix;

/// Orthonormal `Q` (m×k, k = min(m, n)) from the Householder QR of `a`.
///
/// `Q` has orthonormal columns even when `a` is rank deficient or zero.
pub fn thin_q(a: &Matrix) -> Matrix {
    let (m, n) = a.shape();
    let k = m.min(n);
    let mut r = a.clone();
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(k);

    for j in 0..k {
        let mut v: Vec<f64> = (j..m).map(|i| r[(i, j)]).collect();
        let alpha = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if alpha == 0.0 {
            // column already zero below the diagonal: use e_j as reflector-free step
            reflectors.push(Vec::new());
            continue;
        }
        let sign = if v[0] >= 0.0 { 1.0 } else { -1.0 };
        v[0] += sign * alpha;
        let vnorm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= vnorm);
        for c in j..n {
            let s: f64 = (j..m).map(|i| v[i - j] * r[(i, c)]).sum();
            for i in j..m {
                r[(i, c)] -= 2.0 * s * v[i - j];
            }
        }
        reflectors.push(v);
    }

    // Q = H_0 H_1 ... H_{k-1} applied to the first k columns of I
    let mut q = Matrix::from_fn(m, k, |i, j| if i == j { 1.0 } else { 0.0 });
    for j in (0..k).rev() {
        let v = &reflectors[j];
        if v.is_empty() {
            continue;
        }
        for c in 0..k {
            let s: f64 = (j..m).map(|i| v[i - j] * q[(i, c)]).sum();
            if s != 0.0 {
                for i in j..m {
                    q[(i, c)] -= 2.0 * s * v[i - j];
                }
            }
        }
    }
    q
}
