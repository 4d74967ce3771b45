//! Low-rank matrix sensing by stochastic variance-reduced gradient descent
//! on a balanced factorized objective, with numerical diagnostics.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` deliberately rejects NaN

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod objective;
pub mod rng;
pub mod sensing;
pub mod solvers;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use objective::{FactorPair, GradientPair};
pub use sensing::{generate_dataset, EnsembleKind, EnsembleSpec, NoiseKind, NoiseSpec, SensingDataset};
pub use solvers::{
    gd_solve, init_projected_gd, svrg_solve, InitConfig, OutputPolicy, Reference, SolveTrace, SolverConfig,
};
