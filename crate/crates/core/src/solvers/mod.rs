//! Sparse recovery programs.
//!
//! * [`basis_pursuit`]: `min ||x||_1` subject to `A x = b`.
//! * [`bpdn`]: `min ||x||_1` subject to `||A x - b||_2 <= delta`.
//! * [`omp`]: orthogonal matching pursuit.
//! * [`least_norm`]: minimum `l2`-norm solution of `A x = b`.
//! * [`l0_oracle`]: exhaustive search for the sparsest exact fit.
//!
//! The `l1` norm of a complex vector is the sum of moduli. Convex solves are
//! certified after the fact with a dual feasible point, so a report with
//! status [`SolveStatus::Optimal`] carries a verified duality gap.

mod bp;
mod bpdn;
mod l0;
mod least_norm;
mod omp;

pub use bp::{basis_pursuit, BasisPursuit};
pub use bpdn::bpdn;
pub use l0::{l0_oracle, L0Solution, L0_BUDGET};
pub use least_norm::least_norm;
pub use omp::{omp, OmpStop};

use serde::{Deserialize, Serialize};

use crate::scalar::Real;
use crate::sparse::SparseCoefficients;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    MaxIter,
    Infeasible,
}

/// Tolerances and iteration limits for the iterative solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions<T> {
    pub max_iter: usize,
    /// ADMM absolute tolerance (per `sqrt(N)`).
    pub abs_tol: T,
    /// ADMM relative tolerance.
    pub rel_tol: T,
    /// Over-relaxation parameter in `(0, 2)`.
    pub relaxation: T,
    /// Initial penalty; adapted by residual balancing.
    pub rho: T,
    /// Feasibility tolerance, scaled by `1 + ||b||`.
    pub feas_tol: T,
    /// Certified duality gap tolerance, relative to `||x||_1`.
    pub gap_tol: T,
    /// Entries below this fraction of `max |x_j|` are dropped from the output.
    pub support_tol: T,
    /// Iterations between support-polishing attempts.
    pub polish_every: usize,
}

impl<T: Real> Default for SolverOptions<T> {
    fn default() -> Self {
        Self {
            max_iter: 50_000,
            abs_tol: T::tol_floor(1e-10),
            rel_tol: T::tol_floor(1e-10),
            relaxation: T::lit(1.6),
            rho: T::lit(5.0),
            feas_tol: T::tol_floor(1e-10),
            gap_tol: T::tol_floor(1e-8),
            support_tol: T::tol_floor(1e-14),
            polish_every: 10,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport<T> {
    pub solution: SparseCoefficients<T>,
    pub iterations: usize,
    /// `||A x - b||_2` for equality-constrained programs; for `bpdn`, the
    /// amount by which `||A x - b||_2` exceeds `delta` (zero when feasible).
    pub primal_residual: T,
    /// Gap between the primal objective and a certified dual feasible value.
    /// Greedy methods have no dual and report zero.
    pub duality_gap_bound: T,
    pub objective: T,
    pub status: SolveStatus,
}

impl<T: Real> SolveReport<T> {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}
