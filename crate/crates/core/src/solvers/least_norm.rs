use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::{CMat, RowSpace};
use crate::scalar::{norm2, Real};

/// Minimum `l2`-norm solution `A^+ b` of a consistent system `A x = b`.
///
/// Uses a column-pivoted QR factorization of `A*`, so rank-deficient `A`
/// is fine. Fails with [`Error::Infeasible`] when the part of `b` outside
/// the column span exceeds `1e-10 (1 + ||b||)`.
pub fn least_norm<T: Real>(a: &CMat<T>, b: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
    if b.len() != a.rows() {
        return Err(Error::Dimension(format!("rhs has length {}, matrix has {} rows", b.len(), a.rows())));
    }
    let rs = RowSpace::new(a);
    let (w, inconsistency) = rs.reduce(b);
    if inconsistency > T::tol_floor(1e-10) * (T::one() + norm2(b)) {
        return Err(Error::Infeasible { residual: inconsistency.as_f64() });
    }
    Ok(rs.min_norm(&w))
}
