//! Identification of matrices that are sparse in a matrix dictionary.
//!
//! An unknown `n x n` matrix `Gamma = sum_j x_j Psi_j` with few non-zero
//! coefficients is probed by a single test vector `h`. Since
//! `Gamma h = (Psi h) x`, recovering `x` is a sparse recovery problem for
//! the measurement matrix whose columns are `Psi_j h`. This crate provides
//! the dictionaries (time-frequency shifts, random ensembles, partial
//! Fourier), recovery programs, coherence and restricted-isometry
//! diagnostics, evaluators for the associated recovery guarantees, and
//! reproducible Monte-Carlo experiments.
//!
//! Numerical code is generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below name the double-precision instances used by the
//! experiments and the command-line tool.

pub mod analysis;
pub mod combinatorics;
pub mod ensembles;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod rng;
pub mod scalar;
pub mod solvers;
pub mod sparse;
pub mod tfshift;

pub use error::{Error, Result};
pub use scalar::Real;

pub type C64 = num_complex::Complex<f64>;
pub type Mat64 = linalg::CMat<f64>;
pub type Window64 = tfshift::Window<f64>;
pub type Measurement64 = tfshift::MeasurementMatrix<f64>;
pub type Sparse64 = sparse::SparseCoefficients<f64>;
pub type SolveReport64 = solvers::SolveReport<f64>;
pub type SolverOptions64 = solvers::SolverOptions<f64>;
pub type Dictionary64 = ensembles::MatrixDictionary<f64>;
pub type CoherenceReport64 = analysis::CoherenceReport<f64>;
