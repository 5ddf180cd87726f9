use num_complex::Complex;

use super::{SolveReport, SolveStatus};
use crate::error::{Error, Result};
use crate::linalg::{CMat, PivotedQr};
use crate::scalar::{norm2, Real};
use crate::sparse::SparseCoefficients;

/// Stopping rule for [`omp`]. Unset fields fall back to at most `rows` terms
/// and a residual tolerance of `1e-10 (1 + ||b||)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OmpStop<T> {
    pub max_terms: Option<usize>,
    pub residual_tol: Option<T>,
}

impl<T> OmpStop<T> {
    pub fn terms(k: usize) -> Self {
        Self { max_terms: Some(k), residual_tol: None }
    }

    pub fn residual(tol: T) -> Self {
        Self { max_terms: None, residual_tol: Some(tol) }
    }
}

/// Orthogonal matching pursuit.
///
/// Each step adds the column with the largest `|<r, a_j>|` (lowest index on
/// ties) and refits all selected coefficients by least squares. The report's
/// status is `Optimal` when the final residual is within the default
/// feasibility tolerance and `MaxIter` otherwise.
pub fn omp<T: Real>(a: &CMat<T>, b: &[Complex<T>], stop: OmpStop<T>) -> Result<SolveReport<T>> {
    if b.len() != a.rows() {
        return Err(Error::Dimension(format!("rhs has length {}, matrix has {} rows", b.len(), a.rows())));
    }
    let bnorm = norm2(b);
    let feas = T::tol_floor(1e-10) * (T::one() + bnorm);
    let tol = stop.residual_tol.unwrap_or(feas);
    let max_terms = stop.max_terms.unwrap_or(a.rows()).min(a.cols());
    // correlations below this are treated as exact zeros
    let tiny = T::lit(16.0) * T::epsilon() * (T::one() + bnorm);

    let mut support: Vec<usize> = Vec::new();
    let mut coef: Vec<Complex<T>> = Vec::new();
    let mut residual = b.to_vec();
    let mut rnorm = bnorm;
    while support.len() < max_terms && rnorm > tol {
        let corr = a.adjoint_mul_vec(&residual);
        let mut best = 0;
        let mut best_val = T::neg_infinity();
        for (j, c) in corr.iter().enumerate() {
            let m = c.norm();
            if m > best_val {
                best = j;
                best_val = m;
            }
        }
        if best_val <= tiny || support.contains(&best) {
            break;
        }
        support.push(best);
        let a_s = a.select_columns(&support);
        let qr = PivotedQr::new(&a_s);
        if qr.rank() < support.len() {
            support.pop();
            break;
        }
        let (x, _) = qr.solve_least_squares(b);
        let fit = a_s.mul_vec(&x);
        residual = b.iter().zip(&fit).map(|(u, v)| u - v).collect();
        rnorm = norm2(&residual);
        coef = x;
    }

    let mut solution = SparseCoefficients::new(a.cols());
    for (&j, &v) in support.iter().zip(&coef) {
        solution.insert(j, v)?;
    }
    Ok(SolveReport {
        objective: solution.norm1(),
        iterations: support.len(),
        solution,
        primal_residual: rnorm,
        duality_gap_bound: T::zero(),
        status: if rnorm <= feas { SolveStatus::Optimal } else { SolveStatus::MaxIter },
    })
}
