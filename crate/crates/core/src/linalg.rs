//! Dense complex linear algebra used by the solvers and diagnostics.
//!
//! Everything here works on small-to-moderate dense matrices (a few thousand
//! columns at most), stored column-major.

use num_complex::Complex;

use crate::scalar::{inner, norm2, Real};

fn czero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

/// Dense complex matrix stored column by column.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> CMat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![czero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from equally long columns.
    ///
    /// Panics if the columns have different lengths.
    pub fn from_columns(columns: &[Vec<Complex<T>>]) -> Self {
        let rows = columns.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows * columns.len());
        for c in columns {
            assert_eq!(c.len(), rows, "ragged columns");
            data.extend_from_slice(c);
        }
        Self { rows, cols: columns.len(), data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn col(&self, j: usize) -> &[Complex<T>] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [Complex<T>] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[Complex<T>]> {
        self.data.chunks_exact(self.rows.max(1)).take(self.cols)
    }

    pub fn scale(&mut self, s: T) {
        for z in &mut self.data {
            *z = *z * s;
        }
    }

    /// `A x`.
    pub fn mul_vec(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(x.len(), self.cols);
        let mut y = vec![czero(); self.rows];
        for (j, xj) in x.iter().enumerate() {
            if xj.re == T::zero() && xj.im == T::zero() {
                continue;
            }
            for (yi, a) in y.iter_mut().zip(self.col(j)) {
                *yi = *yi + a * xj;
            }
        }
        y
    }

    /// `A* y` (conjugate transpose times vector).
    pub fn adjoint_mul_vec(&self, y: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(y.len(), self.rows);
        self.columns().map(|c| inner(y, c)).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            let y = self.mul_vec(other.col(j));
            out.col_mut(j).copy_from_slice(&y);
        }
        out
    }

    /// `A A*`.
    pub fn outer_gram(&self) -> Self {
        let mut g = Self::zeros(self.rows, self.rows);
        for c in self.columns() {
            for j in 0..self.rows {
                let cj = c[j].conj();
                for i in 0..self.rows {
                    g[(i, j)] = g[(i, j)] + c[i] * cj;
                }
            }
        }
        g
    }

    /// Sub-matrix made of the given columns, in the given order.
    pub fn select_columns(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(self.rows * idx.len());
        for &j in idx {
            data.extend_from_slice(self.col(j));
        }
        Self { rows: self.rows, cols: idx.len(), data }
    }

    /// `A_S* A_S` for the columns in `idx`.
    pub fn gram_of(&self, idx: &[usize]) -> Self {
        let k = idx.len();
        let mut g = Self::zeros(k, k);
        for (b, &jb) in idx.iter().enumerate() {
            for (a, &ja) in idx.iter().enumerate().skip(b) {
                let v = inner(self.col(jb), self.col(ja));
                g[(a, b)] = v;
                g[(b, a)] = v.conj();
            }
        }
        g
    }

    pub fn column_norms(&self) -> Vec<T> {
        self.columns().map(norm2).collect()
    }

    pub fn rank(&self) -> usize {
        PivotedQr::new(self).rank()
    }
}

impl<T> std::ops::Index<(usize, usize)> for CMat<T> {
    type Output = Complex<T>;
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[j * self.rows + i]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for CMat<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[j * self.rows + i]
    }
}

struct Reflector<T> {
    start: usize,
    v: Vec<Complex<T>>,
    beta: T,
}

impl<T: Real> Reflector<T> {
    fn apply(&self, x: &mut [Complex<T>]) {
        let seg = &mut x[self.start..];
        let s = inner(seg, &self.v) * self.beta;
        // x <- x - beta v (v* x)
        for (xi, vi) in seg.iter_mut().zip(&self.v) {
            *xi = *xi - vi * s;
        }
    }
}

/// Householder QR with column pivoting, `A P = Q R`.
pub struct PivotedQr<T> {
    rows: usize,
    reflectors: Vec<Reflector<T>>,
    r: CMat<T>,
    perm: Vec<usize>,
    rank: usize,
}

impl<T: Real> PivotedQr<T> {
    pub fn new(a: &CMat<T>) -> Self {
        let m = a.rows();
        let n = a.cols();
        let mut r = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let steps = m.min(n);
        let mut reflectors = Vec::with_capacity(steps);
        let mut first_pivot = T::zero();
        let mut rank = 0;
        let eps = T::epsilon() * T::lit((m.max(n) as f64) * 10.0);

        for k in 0..steps {
            let mut best = k;
            let mut best_norm = -T::one();
            for j in k..n {
                let nrm = norm2(&r.col(j)[k..]);
                if nrm > best_norm {
                    best_norm = nrm;
                    best = j;
                }
            }
            if k == 0 {
                first_pivot = best_norm;
            }
            if best_norm <= eps * first_pivot || best_norm == T::zero() {
                break;
            }
            if best != k {
                for i in 0..m {
                    let tmp = r[(i, k)];
                    r[(i, k)] = r[(i, best)];
                    r[(i, best)] = tmp;
                }
                perm.swap(k, best);
            }
            let x: Vec<Complex<T>> = r.col(k)[k..].to_vec();
            let alpha = {
                let x0 = x[0];
                let ph = if x0.norm() > T::zero() { x0 / x0.norm() } else { Complex::new(T::one(), T::zero()) };
                -ph * best_norm
            };
            let mut v = x;
            v[0] = v[0] - alpha;
            let vnorm_sq: T = v.iter().map(|z| z.norm_sqr()).sum();
            let refl = if vnorm_sq > T::zero() {
                Reflector { start: k, v, beta: T::lit(2.0) / vnorm_sq }
            } else {
                Reflector { start: k, v, beta: T::zero() }
            };
            for j in k..n {
                refl.apply(r.col_mut(j));
            }
            // clean the annihilated part
            for i in (k + 1)..m {
                r[(i, k)] = czero();
            }
            reflectors.push(refl);
            rank = k + 1;
        }
        Self { rows: m, reflectors, r, perm, rank }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// Upper-trapezoidal factor (only the first `rank` rows are meaningful).
    pub fn r(&self) -> &CMat<T> {
        &self.r
    }

    /// `Q* b`.
    pub fn apply_qh(&self, b: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut x = b.to_vec();
        for h in &self.reflectors {
            h.apply(&mut x);
        }
        x
    }

    /// Explicit first `rank` columns of `Q`.
    pub fn q_thin(&self) -> CMat<T> {
        let mut q = CMat::zeros(self.rows, self.rank);
        for j in 0..self.rank {
            let col = q.col_mut(j);
            col[j] = Complex::new(T::one(), T::zero());
            for h in self.reflectors.iter().rev() {
                h.apply(col);
            }
        }
        q
    }

    /// Basic least-squares solution of `A x = b` and the residual norm.
    pub fn solve_least_squares(&self, b: &[Complex<T>]) -> (Vec<Complex<T>>, T) {
        let qb = self.apply_qh(b);
        let k = self.rank;
        let mut z = vec![czero(); k];
        for i in (0..k).rev() {
            let mut s = qb[i];
            for j in (i + 1)..k {
                s = s - self.r[(i, j)] * z[j];
            }
            z[i] = s / self.r[(i, i)];
        }
        let mut x = vec![czero(); self.r.cols()];
        for (j, zj) in z.into_iter().enumerate() {
            x[self.perm[j]] = zj;
        }
        let res = norm2(&qb[k..]);
        (x, res)
    }
}

/// Orthonormal description of the row space of a (wide) matrix.
///
/// With `A* P = Q R` and numerical rank `r`, the system `A x = b` is
/// equivalent to `Q* x = w`, where `w` solves the triangular system
/// `R11* w = (P^T b)[..r]`; the remaining rows give the inconsistency.
pub struct RowSpace<T> {
    q: CMat<T>,
    qr: PivotedQr<T>,
}

impl<T: Real> RowSpace<T> {
    pub fn new(a: &CMat<T>) -> Self {
        let qr = PivotedQr::new(&a.adjoint());
        let q = qr.q_thin();
        Self { q, qr }
    }

    pub fn rank(&self) -> usize {
        self.qr.rank()
    }

    /// Orthonormal basis of the row space, one basis vector per column (`N x r`).
    pub fn basis(&self) -> &CMat<T> {
        &self.q
    }

    /// Reduced right-hand side `w` and the norm of the inconsistent part of `b`.
    pub fn reduce(&self, b: &[Complex<T>]) -> (Vec<Complex<T>>, T) {
        let r = self.qr.rank();
        let rr = self.qr.r();
        let pb: Vec<Complex<T>> = self.qr.perm().iter().map(|&i| b[i]).collect();
        // R* is lower triangular in its leading r x r block.
        let mut w = vec![czero(); r];
        for i in 0..r {
            let mut s = pb[i];
            for j in 0..i {
                s = s - rr[(j, i)].conj() * w[j];
            }
            w[i] = s / rr[(i, i)].conj();
        }
        let mut resid = T::zero();
        for (i, pbi) in pb.iter().enumerate().skip(r) {
            let mut s = *pbi;
            for (j, wj) in w.iter().enumerate() {
                s = s - rr[(j, i)].conj() * wj;
            }
            resid = resid + s.norm_sqr();
        }
        (w, resid.sqrt())
    }

    /// Minimum-norm solution `Q w` of a consistent system.
    pub fn min_norm(&self, w: &[Complex<T>]) -> Vec<Complex<T>> {
        self.q.mul_vec(w)
    }
}

/// Cholesky factorization `A = L L*` of a Hermitian positive definite matrix.
pub struct Cholesky<T> {
    l: CMat<T>,
}

impl<T: Real> Cholesky<T> {
    pub fn new(a: &CMat<T>) -> Option<Self> {
        let n = a.rows();
        let mut l = CMat::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)].re;
            for k in 0..j {
                d = d - l[(j, k)].norm_sqr();
            }
            if d <= T::zero() || !d.is_finite() {
                return None;
            }
            let djj = d.sqrt();
            l[(j, j)] = Complex::new(djj, T::zero());
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s = s - l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = s / djj;
            }
        }
        Some(Self { l })
    }

    pub fn solve(&self, b: &[Complex<T>]) -> Vec<Complex<T>> {
        let n = self.l.rows();
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s = s - self.l[(i, k)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s = s - self.l[(k, i)].conj() * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        y
    }
}

/// Solves the real square system `A x = b` in place by Gaussian elimination
/// with partial pivoting. `a` is row-major `n x n`; on success `b` holds `x`.
/// Returns `false` when a pivot vanishes to working precision.
pub fn real_solve<T: Real>(a: &mut [T], b: &mut [T], n: usize) -> bool {
    assert_eq!(a.len(), n * n);
    assert_eq!(b.len(), n);
    let scale = a.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let tiny = scale * T::epsilon() * T::lit(n as f64);
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i * n + col].abs().partial_cmp(&a[j * n + col].abs()).unwrap_or(std::cmp::Ordering::Equal))
            .unwrap_or(col);
        if !(a[piv * n + col].abs() > tiny) {
            return false;
        }
        if piv != col {
            for c in 0..n {
                a.swap(piv * n + c, col * n + c);
            }
            b.swap(piv, col);
        }
        let d = a[col * n + col];
        for i in col + 1..n {
            let f = a[i * n + col] / d;
            if f == T::zero() {
                continue;
            }
            for c in col..n {
                a[i * n + c] = a[i * n + c] - f * a[col * n + c];
            }
            b[i] = b[i] - f * b[col];
        }
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for c in i + 1..n {
            s = s - a[i * n + c] * b[c];
        }
        b[i] = s / a[i * n + i];
    }
    true
}

/// Eigenvalues of a real symmetric matrix (row-major `n x n`) by cyclic Jacobi sweeps.
fn symmetric_eigenvalues<T: Real>(mut a: Vec<T>, n: usize) -> Vec<T> {
    let idx = |i: usize, j: usize| i * n + j;
    for _sweep in 0..100 {
        let mut off = T::zero();
        let mut diag = T::zero();
        for i in 0..n {
            diag = diag + a[idx(i, i)] * a[idx(i, i)];
            for j in 0..n {
                if i != j {
                    off = off + a[idx(i, j)] * a[idx(i, j)];
                }
            }
        }
        if off <= T::epsilon() * T::epsilon() * (diag + off) || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[idx(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let app = a[idx(p, p)];
                let aqq = a[idx(q, q)];
                let theta = (aqq - app) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let t = if theta == T::zero() { T::one() } else { t };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[idx(k, p)];
                    let akq = a[idx(k, q)];
                    a[idx(k, p)] = c * akp - s * akq;
                    a[idx(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[idx(p, k)];
                    let aqk = a[idx(q, k)];
                    a[idx(p, k)] = c * apk - s * aqk;
                    a[idx(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<T> = (0..n).map(|i| a[idx(i, i)]).collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    ev
}

/// Eigenvalues of a Hermitian matrix in ascending order.
///
/// Works on the real symmetric embedding `[[X, -Y], [Y, X]]` of `X + iY`,
/// whose spectrum is that of the Hermitian matrix with every eigenvalue doubled.
pub fn hermitian_eigenvalues<T: Real>(h: &CMat<T>) -> Vec<T> {
    let n = h.rows();
    if n == 0 {
        return Vec::new();
    }
    let m = 2 * n;
    let mut a = vec![T::zero(); m * m];
    for i in 0..n {
        for j in 0..n {
            // symmetrize against rounding in the input
            let z = (h[(i, j)] + h[(j, i)].conj()) * T::lit(0.5);
            a[i * m + j] = z.re;
            a[(i + n) * m + (j + n)] = z.re;
            a[i * m + (j + n)] = -z.im;
            a[(i + n) * m + j] = z.im;
        }
    }
    let ev = symmetric_eigenvalues(a, m);
    ev.chunks(2).map(|p| (p[0] + p[1]) * T::lit(0.5)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::norm2;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn sample() -> CMat<f64> {
        CMat::from_fn(4, 6, |i, j| c(((i * 7 + j * 3) % 5) as f64 - 2.0, ((i + 2 * j) % 3) as f64))
    }

    #[test]
    fn qr_least_squares_on_tall_system() {
        let a = CMat::from_columns(&[vec![c(1., 0.), c(1., 0.), c(1., 0.)], vec![c(0., 0.), c(1., 1.), c(2., 0.)]]);
        let x_true = vec![c(0.5, -1.0), c(2.0, 0.25)];
        let b = a.mul_vec(&x_true);
        let (x, res) = PivotedQr::new(&a).solve_least_squares(&b);
        assert!(res < 1e-13);
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).norm() < 1e-13);
        }
    }

    #[test]
    fn rank_detects_duplicate_columns() {
        let col = vec![c(1., 2.), c(0., 1.), c(3., 0.)];
        let a = CMat::from_columns(&[col.clone(), col.clone(), vec![c(1., 0.), c(0., 0.), c(0., 0.)]]);
        assert_eq!(a.rank(), 2);
        assert_eq!(CMat::<f64>::identity(5).rank(), 5);
    }

    #[test]
    fn row_space_min_norm_solution() {
        let a = sample();
        let rs = RowSpace::new(&a);
        assert_eq!(rs.rank(), 4);
        let b = vec![c(1., 0.), c(0., -1.), c(2., 0.5), c(0., 0.)];
        let (w, inc) = rs.reduce(&b);
        assert!(inc < 1e-12);
        let x = rs.min_norm(&w);
        let ax = a.mul_vec(&x);
        for (u, v) in ax.iter().zip(&b) {
            assert!((u - v).norm() < 1e-12);
        }
        // x lies in the row space: it equals A* (A A*)^{-1} b
        let chol = Cholesky::new(&a.outer_gram()).unwrap();
        let x2 = a.adjoint_mul_vec(&chol.solve(&b));
        for (u, v) in x.iter().zip(&x2) {
            assert!((u - v).norm() < 1e-11);
        }
    }

    #[test]
    fn row_space_flags_inconsistent_rhs() {
        let row = [c(1., 0.), c(2., 0.), c(0., 1.)];
        let a = CMat::from_fn(2, 3, |_, j| row[j]);
        let rs = RowSpace::new(&a);
        assert_eq!(rs.rank(), 1);
        let (_, inc) = rs.reduce(&[c(1., 0.), c(0., 0.)]);
        assert!(inc > 1e-3);
        let (_, ok) = rs.reduce(&[c(1., 1.), c(1., 1.)]);
        assert!(ok < 1e-12);
    }

    #[test]
    fn hermitian_spectrum_of_rank_one_update() {
        // I + v v*  has eigenvalues 1 (twice) and 1 + |v|^2
        let v = [c(1., 1.), c(0., 2.), c(-1., 0.)];
        let h = CMat::from_fn(3, 3, |i, j| {
            let d = if i == j { 1.0 } else { 0.0 };
            c(d, 0.) + v[i] * v[j].conj()
        });
        let ev = hermitian_eigenvalues(&h);
        let vv = norm2(&v).powi(2);
        assert!((ev[0] - 1.0).abs() < 1e-12);
        assert!((ev[1] - 1.0).abs() < 1e-12);
        assert!((ev[2] - 1.0 - vv).abs() < 1e-12);
    }

    #[test]
    fn cholesky_solves_gram_system() {
        let a = sample();
        let g = a.outer_gram();
        let chol = Cholesky::new(&g).unwrap();
        let b = vec![c(1., 0.), c(2., 1.), c(0., 0.), c(-1., 3.)];
        let x = chol.solve(&b);
        let gx = g.mul_vec(&x);
        for (u, v) in gx.iter().zip(&b) {
            assert!((u - v).norm() < 1e-11);
        }
    }

    #[test]
    fn real_solve_with_pivoting() {
        // first pivot is zero, forcing a row swap
        let mut a = vec![0.0, 2.0, 1.0, 1.0, 1.0, 0.0, 2.0, 0.0, 1.0];
        let mut b = vec![5.0, 3.0, 5.0];
        assert!(real_solve(&mut a, &mut b, 3));
        for (u, v) in b.iter().zip([1.5f64, 1.5, 2.0]) {
            assert!((u - v).abs() < 1e-14, "{b:?}");
        }
        let mut sing: Vec<f64> = vec![1.0, 2.0, 2.0, 4.0];
        assert!(!real_solve(&mut sing, &mut [1.0f64, 1.0], 2));
    }
}
