use num_complex::Complex;

use crate::combinatorics::{binomial, Combinations};
use crate::error::{Error, Result};
use crate::linalg::{CMat, PivotedQr};
use crate::scalar::{norm2, Real};
use crate::sparse::SparseCoefficients;

/// Largest number of supports of size `k_max` the oracle will enumerate.
pub const L0_BUDGET: u128 = 1_000_000;

#[derive(Debug, Clone)]
pub struct L0Solution<T> {
    /// Least-squares coefficients on the first minimizing support.
    pub coefficients: SparseCoefficients<T>,
    pub sparsity: usize,
    /// Every support of the minimal size that fits `b`, in lexicographic order.
    pub all_supports: Vec<Vec<usize>>,
    pub residual: T,
}

/// Sparsest exact fit by exhaustive search over supports of size `0..=k_max`.
///
/// Supports are visited in lexicographic order; the first one with
/// least-squares residual at most `tol` gives the coefficients.
pub fn l0_oracle<T: Real>(a: &CMat<T>, b: &[Complex<T>], k_max: usize, tol: T) -> Result<L0Solution<T>> {
    if b.len() != a.rows() {
        return Err(Error::Dimension(format!("rhs has length {}, matrix has {} rows", b.len(), a.rows())));
    }
    let n = a.cols();
    let count = binomial(n, k_max.min(n));
    if count > L0_BUDGET {
        return Err(Error::Budget { count, budget: L0_BUDGET });
    }
    let bnorm = norm2(b);
    if bnorm <= tol {
        return Ok(L0Solution {
            coefficients: SparseCoefficients::new(n),
            sparsity: 0,
            all_supports: vec![Vec::new()],
            residual: bnorm,
        });
    }
    for k in 1..=k_max.min(n) {
        let mut first: Option<(Vec<usize>, Vec<Complex<T>>, T)> = None;
        let mut all = Vec::new();
        for support in Combinations::new(n, k) {
            let qr = PivotedQr::new(&a.select_columns(&support));
            if qr.rank() < k {
                continue;
            }
            let (x, res) = qr.solve_least_squares(b);
            if res <= tol {
                if first.is_none() {
                    first = Some((support.clone(), x, res));
                }
                all.push(support);
            }
        }
        if let Some((support, x, residual)) = first {
            let mut coefficients = SparseCoefficients::new(n);
            for (&j, &v) in support.iter().zip(&x) {
                coefficients.insert(j, v)?;
            }
            return Ok(L0Solution { coefficients, sparsity: k, all_supports: all, residual });
        }
    }
    Err(Error::NotFound { k_max })
}
