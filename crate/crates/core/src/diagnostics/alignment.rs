use crate::error::{Error, Result};
use crate::linalg::{procrustes_rotation, Matrix};
use crate::objective::FactorPair;

/// Optimal alignment of `Z` to `Z*` over orthogonal `r × r` matrices.
#[derive(Clone, Debug)]
pub struct AlignmentResult {
    pub rotation: Matrix,
    /// `H = Z − Z*R`, stacked.
    pub h: Matrix,
    /// `‖H‖_F`.
    pub dist: f64,
}

/// `d(Z, Z*) = min_R ‖Z − Z*R‖_F` on the stacked factors.
pub fn distance(z: &FactorPair, zstar: &FactorPair) -> Result<AlignmentResult> {
    if z.d1() != zstar.d1() || z.d2() != zstar.d2() || z.rank() != zstar.rank() {
        return Err(Error::dims(
            "distance",
            format!("({}, {}, {})", zstar.d1(), zstar.d2(), zstar.rank()),
            format!("({}, {}, {})", z.d1(), z.d2(), z.rank()),
        ));
    }
    let zs = z.stacked();
    let zss = zstar.stacked();
    let rotation = procrustes_rotation(&zs, &zss)?;
    let h = zs.sub(&zss.matmul(&rotation)?)?;
    let dist = h.frobenius_norm();
    Ok(AlignmentResult { rotation, h, dist })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{gaussian_matrix, random_rotation, stream};

    fn pair(rng: &mut crate::rng::Stream, d1: usize, d2: usize, r: usize) -> FactorPair {
        FactorPair::new(gaussian_matrix(rng, d1, r), gaussian_matrix(rng, d2, r)).unwrap()
    }

    #[test]
    fn self_distance_is_zero() {
        let mut rng = stream(1, "align");
        let z = pair(&mut rng, 5, 4, 2);
        assert!(distance(&z, &z).unwrap().dist <= 1e-12);
    }

    #[test]
    fn rotation_orbit_has_zero_distance() {
        let mut rng = stream(2, "align");
        let z = pair(&mut rng, 7, 5, 3);
        let r = random_rotation(&mut rng, 3);
        let res = distance(&z.rotate(&r).unwrap(), &z).unwrap();
        assert!(res.dist <= 1e-8);
        assert!(res.rotation.rel_diff(&r).unwrap() <= 1e-8);
    }

    #[test]
    fn rank_one_matches_sign_search() {
        let mut rng = stream(3, "align");
        for _ in 0..20 {
            let z = pair(&mut rng, 4, 3, 1);
            let zs = pair(&mut rng, 4, 3, 1);
            let plus = z.stacked().sub(&zs.stacked()).unwrap().frobenius_norm();
            let minus = z.stacked().add(&zs.stacked()).unwrap().frobenius_norm();
            let d = distance(&z, &zs).unwrap().dist;
            assert!((d - plus.min(minus)).abs() <= 1e-12);
        }
    }

    #[test]
    fn h_is_residual() {
        let mut rng = stream(4, "align");
        let z = pair(&mut rng, 4, 4, 2);
        let zs = pair(&mut rng, 4, 4, 2);
        let res = distance(&z, &zs).unwrap();
        let want = z.stacked().sub(&zs.stacked().matmul(&res.rotation).unwrap()).unwrap();
        assert_eq!(res.h, want);
    }

    #[test]
    fn mismatched_rank_is_rejected() {
        let mut rng = stream(5, "align");
        let a = pair(&mut rng, 4, 3, 1);
        let b = pair(&mut rng, 4, 3, 2);
        assert!(matches!(distance(&a, &b), Err(Error::DimensionMismatch { .. })));
    }
}
