//! Regularized factorized objective
//!
//! `f(U, V) = L(UVᵀ) + ⅛‖UᵀU − VᵀV‖²_F` with `L(X) = (1/2N) Σᵢ (⟨Aᵢ, X⟩ − yᵢ)²`,
//! and its batch components `fᵢ = ℓᵢ + ⅛‖UᵀU − VᵀV‖²_F` where `ℓᵢ` averages
//! over the `b` measurements of batch `i`. Every component carries the full
//! regularizer, so the mean of the component gradients is the full gradient.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::linalg::{axpy_slice, top_k_svd, Matrix};
use crate::sensing::SensingDataset;

/// Factor pair `Z = [U; V]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FactorPair {
    pub u: Matrix,
    pub v: Matrix,
}

impl FactorPair {
    pub fn new(u: Matrix, v: Matrix) -> Result<Self> {
        if u.cols() != v.cols() {
            return Err(Error::dims("FactorPair::new", u.cols(), v.cols()));
        }
        Ok(FactorPair { u, v })
    }

    pub fn zeros(d1: usize, d2: usize, r: usize) -> Self {
        FactorPair {
            u: Matrix::zeros(d1, r),
            v: Matrix::zeros(d2, r),
        }
    }

    /// Splits a stacked `(d1 + d2) × r` matrix after row `d1`.
    pub fn from_stacked(z: &Matrix, d1: usize) -> Result<Self> {
        let (u, v) = z.split_rows(d1)?;
        Ok(FactorPair { u, v })
    }

    /// Balanced factors `U = Ū·Σ^{1/2}`, `V = V̄·Σ^{1/2}` of the best rank-`r`
    /// approximation of `x`.
    pub fn balanced_from_matrix(x: &Matrix, r: usize) -> Result<Self> {
        let svd = top_k_svd(x, r)?;
        let root: Vec<f64> = svd.s.iter().map(|s| s.sqrt()).collect();
        Ok(FactorPair {
            u: svd.u.scale_columns(&root),
            v: svd.v.scale_columns(&root),
        })
    }

    pub fn d1(&self) -> usize {
        self.u.rows()
    }

    pub fn d2(&self) -> usize {
        self.v.rows()
    }

    pub fn rank(&self) -> usize {
        self.u.cols()
    }

    pub fn stacked(&self) -> Matrix {
        Matrix::vstack(&self.u, &self.v).expect("factor column counts agree")
    }

    /// `[U; −V]`.
    pub fn stacked_flipped(&self) -> Matrix {
        Matrix::vstack(&self.u, &self.v.scale(-1.0)).expect("factor column counts agree")
    }

    /// `X = UVᵀ`.
    pub fn product(&self) -> Matrix {
        self.u.matmul_t(&self.v).expect("factor column counts agree")
    }

    /// `UᵀU − VᵀV`.
    pub fn imbalance(&self) -> Matrix {
        let uu = self.u.t_matmul(&self.u).expect("square gram");
        let vv = self.v.t_matmul(&self.v).expect("square gram");
        uu.sub(&vv).expect("same rank")
    }

    /// `(U·R, V·R)`.
    pub fn rotate(&self, r: &Matrix) -> Result<Self> {
        Ok(FactorPair {
            u: self.u.matmul(r)?,
            v: self.v.matmul(r)?,
        })
    }

    /// `self − step·g`.
    pub fn step(&self, step: f64, g: &GradientPair) -> Result<Self> {
        let mut out = self.clone();
        out.u.axpy(-step, &g.gu)?;
        out.v.axpy(-step, &g.gv)?;
        Ok(out)
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }

    pub(crate) fn check_against(&self, ds: &SensingDataset, op: &'static str) -> Result<()> {
        if self.d1() != ds.d1() || self.d2() != ds.d2() {
            return Err(Error::dims(
                op,
                format!("factors with {} and {} rows", ds.d1(), ds.d2()),
                format!("{} and {}", self.d1(), self.d2()),
            ));
        }
        Ok(())
    }
}

/// Gradient with respect to `(U, V)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientPair {
    pub gu: Matrix,
    pub gv: Matrix,
}

impl GradientPair {
    pub fn zeros_like(z: &FactorPair) -> Self {
        GradientPair {
            gu: Matrix::zeros(z.d1(), z.rank()),
            gv: Matrix::zeros(z.d2(), z.rank()),
        }
    }

    pub fn stacked(&self) -> Matrix {
        Matrix::vstack(&self.gu, &self.gv).expect("gradient blocks agree")
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.gu.frobenius_norm_sq() + self.gv.frobenius_norm_sq()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sq().sqrt()
    }

    pub fn add(&self, other: &GradientPair) -> Result<Self> {
        Ok(GradientPair {
            gu: self.gu.add(&other.gu)?,
            gv: self.gv.add(&other.gv)?,
        })
    }

    pub fn sub(&self, other: &GradientPair) -> Result<Self> {
        Ok(GradientPair {
            gu: self.gu.sub(&other.gu)?,
            gv: self.gv.sub(&other.gv)?,
        })
    }

    pub fn scale(&self, alpha: f64) -> Self {
        GradientPair {
            gu: self.gu.scale(alpha),
            gv: self.gv.scale(alpha),
        }
    }

    /// `self += alpha·other`.
    pub fn axpy(&mut self, alpha: f64, other: &GradientPair) -> Result<()> {
        self.gu.axpy(alpha, &other.gu)?;
        self.gv.axpy(alpha, &other.gv)
    }

    /// Frobenius distance `‖self − other‖_F`.
    pub fn distance(&self, other: &GradientPair) -> Result<f64> {
        Ok(self.sub(other)?.frobenius_norm())
    }
}

/// Sum of squared residuals over `range` divided by `2·|range|`.
fn loss_range(ds: &SensingDataset, z: &FactorPair, range: Range<usize>) -> f64 {
    let count = range.len() as f64;
    let x = z.product();
    let sq: f64 = ds.residuals(&x, range).iter().map(|r| r * r).sum();
    sq / (2.0 * count)
}

/// `(1/|range|) Σ rᵢ Aᵢ` and the resulting factor gradients `(G·V, Gᵀ·U)`.
fn loss_grad_range(ds: &SensingDataset, z: &FactorPair, range: Range<usize>) -> GradientPair {
    let count = range.len() as f64;
    let x = z.product();
    let mut g = Matrix::zeros(ds.d1(), ds.d2());
    for (i, r) in range.clone().zip(ds.residuals(&x, range)) {
        axpy_slice(g.data_mut(), r / count, ds.measurement(i));
    }
    GradientPair {
        gu: g.matmul(&z.v).expect("dims checked"),
        gv: g.t_matmul(&z.u).expect("dims checked"),
    }
}

/// `L(UVᵀ) = (1/2N) Σᵢ (⟨Aᵢ, UVᵀ⟩ − yᵢ)²`.
pub fn loss_full(ds: &SensingDataset, z: &FactorPair) -> Result<f64> {
    z.check_against(ds, "loss_full")?;
    if ds.is_empty() {
        return Err(Error::InvalidArgument("empty dataset".into()));
    }
    Ok(loss_range(ds, z, ds.full_range()))
}

/// `ℓᵢ(UVᵀ)` over batch `i`.
pub fn loss_component(ds: &SensingDataset, z: &FactorPair, i: usize) -> Result<f64> {
    z.check_against(ds, "loss_component")?;
    Ok(loss_range(ds, z, ds.batch_range(i)?))
}

/// `⅛‖UᵀU − VᵀV‖²_F`.
pub fn regularizer(z: &FactorPair) -> f64 {
    z.imbalance().frobenius_norm_sq() / 8.0
}

pub fn objective_full(ds: &SensingDataset, z: &FactorPair) -> Result<f64> {
    Ok(loss_full(ds, z)? + regularizer(z))
}

pub fn objective_component(ds: &SensingDataset, z: &FactorPair, i: usize) -> Result<f64> {
    Ok(loss_component(ds, z, i)? + regularizer(z))
}

/// `(½U(UᵀU − VᵀV), ½V(VᵀV − UᵀU))`.
pub fn grad_regularizer(z: &FactorPair) -> GradientPair {
    let d = z.imbalance();
    GradientPair {
        gu: z.u.matmul(&d).expect("rank agrees").scale(0.5),
        gv: z.v.matmul(&d).expect("rank agrees").scale(-0.5),
    }
}

/// `(∇_U L, ∇_V L)` without the regularizer.
pub fn grad_loss_full(ds: &SensingDataset, z: &FactorPair) -> Result<GradientPair> {
    z.check_against(ds, "grad_loss_full")?;
    if ds.is_empty() {
        return Err(Error::InvalidArgument("empty dataset".into()));
    }
    Ok(loss_grad_range(ds, z, ds.full_range()))
}

/// Gradient of the full regularized objective.
pub fn grad_full(ds: &SensingDataset, z: &FactorPair) -> Result<GradientPair> {
    grad_loss_full(ds, z)?.add(&grad_regularizer(z))
}

/// `∇ℓᵢ` over batch `i`, without the regularizer.
pub fn grad_loss_component(ds: &SensingDataset, z: &FactorPair, i: usize) -> Result<GradientPair> {
    z.check_against(ds, "grad_loss_component")?;
    Ok(loss_grad_range(ds, z, ds.batch_range(i)?))
}

/// `∇fᵢ = ∇ℓᵢ + ∇(⅛‖UᵀU − VᵀV‖²_F)`.
pub fn grad_component(ds: &SensingDataset, z: &FactorPair, i: usize) -> Result<GradientPair> {
    grad_loss_component(ds, z, i)?.add(&grad_regularizer(z))
}
