#![allow(dead_code)]

use matsense::rng::{gaussian_matrix, stream};
use matsense::{generate_dataset, EnsembleSpec, FactorPair, Matrix, NoiseSpec, SensingDataset};
use nalgebra::DMatrix;

pub fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.data())
}

pub fn from_na(m: &DMatrix<f64>) -> Matrix {
    Matrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Small random problem with a rank-`r` ground truth.
pub fn small_problem(
    d1: usize,
    d2: usize,
    r: usize,
    n: usize,
    b: usize,
    sigma: f64,
    seed: u64,
) -> (SensingDataset, Matrix) {
    let mut rng = stream(seed, "test/xstar");
    let u = gaussian_matrix(&mut rng, d1, r);
    let v = gaussian_matrix(&mut rng, d2, r);
    let xstar = u.matmul_t(&v).unwrap();
    let noise = if sigma > 0.0 {
        NoiseSpec::gaussian(sigma)
    } else {
        NoiseSpec::NONE
    };
    let ds = generate_dataset(EnsembleSpec::gaussian(d1, d2), &xstar, n, b, noise, seed).unwrap();
    (ds, xstar)
}

pub fn random_pair(d1: usize, d2: usize, r: usize, seed: u64) -> FactorPair {
    let mut rng = stream(seed, "test/pair");
    FactorPair::new(gaussian_matrix(&mut rng, d1, r), gaussian_matrix(&mut rng, d2, r)).unwrap()
}

/// Objective evaluated directly with nalgebra over a measurement range.
pub fn oracle_loss(ds: &SensingDataset, z: &FactorPair, range: std::ops::Range<usize>) -> f64 {
    let x = to_na(&z.u) * to_na(&z.v).transpose();
    let y = ds.observations();
    let len = range.len() as f64;
    range
        .map(|i| {
            let a = to_na(&ds.sensing_matrix(i));
            let res = a.dot(&x) - y[i];
            res * res
        })
        .sum::<f64>()
        / (2.0 * len)
}

pub fn oracle_regularizer(z: &FactorPair) -> f64 {
    let (u, v) = (to_na(&z.u), to_na(&z.v));
    let d = u.transpose() * &u - v.transpose() * &v;
    d.norm_squared() / 8.0
}

/// Closed-form gradient of the regularized objective over a range.
pub fn oracle_grad(ds: &SensingDataset, z: &FactorPair, range: std::ops::Range<usize>) -> (DMatrix<f64>, DMatrix<f64>) {
    let (u, v) = (to_na(&z.u), to_na(&z.v));
    let x = &u * v.transpose();
    let y = ds.observations();
    let len = range.len() as f64;
    let mut s = DMatrix::zeros(ds.d1(), ds.d2());
    for i in range {
        let a = to_na(&ds.sensing_matrix(i));
        s += &a * ((a.dot(&x) - y[i]) / len);
    }
    let d = u.transpose() * &u - v.transpose() * &v;
    let gu = &s * &v + &u * &d * 0.5;
    let gv = s.transpose() * &u - &v * &d * 0.5;
    (gu, gv)
}
