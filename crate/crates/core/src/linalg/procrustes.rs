use super::svd::jacobi_svd;
use super::Matrix;
use crate::error::{Error, Result};

/// Orthogonal `R = argmin_{RᵀR = I} ‖z − zstar·R‖_F`.
///
/// With `zstarᵀ z = P·D·Qᵀ`, the minimizer is `R = P·Qᵀ`.
pub fn procrustes_rotation(z: &Matrix, zstar: &Matrix) -> Result<Matrix> {
    if z.shape() != zstar.shape() {
        return Err(Error::dims(
            "procrustes_rotation",
            format!("{}x{}", zstar.rows(), zstar.cols()),
            format!("{}x{}", z.rows(), z.cols()),
        ));
    }
    let cross = zstar.t_matmul(z)?;
    let svd = jacobi_svd(&cross)?;
    svd.u.matmul_t(&svd.v)
}
