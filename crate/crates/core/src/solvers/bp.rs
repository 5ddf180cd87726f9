use num_complex::Complex;

use super::{SolveReport, SolveStatus, SolverOptions};
use crate::error::{Error, Result};
use crate::linalg::{real_solve, CMat, Cholesky, PivotedQr, RowSpace};
use crate::scalar::{inner, norm1, norm2, norm_inf, phase, soft_threshold, Real};
use crate::sparse::SparseCoefficients;

fn zeros<T: Real>(n: usize) -> Vec<Complex<T>> {
    vec![Complex::new(T::zero(), T::zero()); n]
}

pub(super) fn trivial_report<T: Real>(n_cols: usize, residual: T, status: SolveStatus) -> SolveReport<T> {
    SolveReport {
        solution: SparseCoefficients::new(n_cols),
        iterations: 0,
        primal_residual: residual,
        duality_gap_bound: T::zero(),
        objective: T::zero(),
        status,
    }
}

/// Equality-constrained problem in orthonormal-row form: `Q* x = w`, `||w|| = 1`.
struct Reduced<'a, T> {
    q: &'a CMat<T>,
    w: Vec<Complex<T>>,
}

impl<T: Real> Reduced<'_, T> {
    fn project_into(&self, v: &[Complex<T>], out: &mut [Complex<T>]) {
        let qv = self.q.adjoint_mul_vec(v);
        let t: Vec<_> = self.w.iter().zip(&qv).map(|(a, b)| a - b).collect();
        let corr = self.q.mul_vec(&t);
        for ((o, a), c) in out.iter_mut().zip(v).zip(&corr) {
            *o = a + c;
        }
    }

    /// Dual objective `Re<w, y>` after scaling `y` into `||Q y||_inf <= 1`.
    /// Any such value is a lower bound on the optimal `l1` norm.
    fn dual_value(&self, y: &[Complex<T>]) -> T {
        let g = self.q.mul_vec(y);
        let c = norm_inf(&g).max(T::one());
        inner(&self.w, y).re / c
    }

    fn restricted(&self, support: &[usize]) -> CMat<T> {
        CMat::from_fn(self.q.cols(), support.len(), |i, c| self.q[(support[c], i)].conj())
    }

    /// Smallest correction of `z`, supported on `supp(z)`, that makes it feasible.
    fn feasible_on_support(&self, z: &[Complex<T>]) -> Option<Vec<Complex<T>>> {
        let support = nonzero_support(z);
        if support.is_empty() {
            return None;
        }
        let rs = RowSpace::new(&self.restricted(&support));
        let qz = self.q.adjoint_mul_vec(z);
        let target: Vec<_> = self.w.iter().zip(&qz).map(|(a, b)| a - b).collect();
        let (wr, inconsistency) = rs.reduce(&target);
        if inconsistency > T::lit(1e3) * T::epsilon() {
            return None;
        }
        let d = rs.min_norm(&wr);
        let mut out = z.to_vec();
        for (&j, dj) in support.iter().zip(&d) {
            out[j] = out[j] + dj;
        }
        Some(out)
    }

    /// Newton refinement of the optimality conditions on a fixed support,
    /// `sum_j a_j x_j = w` and `a_j* y = phase(x_j)` for `j` in the support,
    /// written in polar form `x_j = rho_j e^{i theta_j}`. This handles
    /// supports larger than the rank, where a least-squares refit is not
    /// unique. Returns the refined point and the dual value of `y`.
    fn newton(&self, support: &[usize], z: &[Complex<T>], y0: &[Complex<T>]) -> Option<(Vec<Complex<T>>, T)> {
        let r = self.q.cols();
        let k = support.len();
        if k == 0 || k > 2 * r {
            return None;
        }
        let a_s = self.restricted(support);
        let mut rho: Vec<T> = support.iter().map(|&j| z[j].norm()).collect();
        let mut theta: Vec<T> = support.iter().map(|&j| z[j].arg()).collect();
        let mut y = y0.to_vec();
        let m = 2 * (k + r);
        let tol = T::lit(1e3) * T::epsilon();
        let mut jac = vec![T::zero(); m * m];
        let mut rhs = vec![T::zero(); m];
        let mut converged = false;
        let mut prev = T::infinity();
        for _ in 0..20 {
            let e: Vec<Complex<T>> = theta.iter().map(|&t| Complex::from_polar(T::one(), t)).collect();
            let xs: Vec<Complex<T>> = rho.iter().zip(&e).map(|(&p, ei)| ei * p).collect();
            let f1: Vec<_> = a_s.mul_vec(&xs).iter().zip(&self.w).map(|(u, v)| u - v).collect();
            let f2: Vec<_> = a_s.adjoint_mul_vec(&y).iter().zip(&e).map(|(u, v)| u - v).collect();
            let fnorm = (norm2(&f1).powi(2) + norm2(&f2).powi(2)).sqrt();
            if !fnorm.is_finite() {
                return None;
            }
            if fnorm <= tol {
                converged = true;
                break;
            }
            // far from the basin of quadratic convergence: give up early
            if fnorm > T::lit(0.5) * prev {
                return None;
            }
            prev = fnorm;
            jac.iter_mut().for_each(|v| *v = T::zero());
            for c in 0..k {
                for i in 0..r {
                    let a = a_s[(i, c)];
                    let d_rho = a * e[c];
                    let d_theta = Complex::new(T::zero(), T::one()) * d_rho * rho[c];
                    jac[i * m + c] = d_rho.re;
                    jac[(r + i) * m + c] = d_rho.im;
                    jac[i * m + k + c] = d_theta.re;
                    jac[(r + i) * m + k + c] = d_theta.im;
                    // d(a_c* y)/d(Re y_i) = conj(a), d/d(Im y_i) = i conj(a)
                    jac[(2 * r + c) * m + 2 * k + i] = a.re;
                    jac[(2 * r + k + c) * m + 2 * k + i] = -a.im;
                    jac[(2 * r + c) * m + 2 * k + r + i] = a.im;
                    jac[(2 * r + k + c) * m + 2 * k + r + i] = a.re;
                }
                // d(-e^{i theta})/d theta = -i e^{i theta}
                jac[(2 * r + c) * m + k + c] = e[c].im;
                jac[(2 * r + k + c) * m + k + c] = -e[c].re;
            }
            for i in 0..r {
                rhs[i] = -f1[i].re;
                rhs[r + i] = -f1[i].im;
            }
            for c in 0..k {
                rhs[2 * r + c] = -f2[c].re;
                rhs[2 * r + k + c] = -f2[c].im;
            }
            if !real_solve(&mut jac, &mut rhs, m) {
                return None;
            }
            for c in 0..k {
                rho[c] = rho[c] + rhs[c];
                theta[c] = theta[c] + rhs[k + c];
            }
            for i in 0..r {
                y[i] = y[i] + Complex::new(rhs[2 * k + i], rhs[2 * k + r + i]);
            }
        }
        if !converged || rho.iter().any(|&p| !(p > T::zero())) {
            return None;
        }
        let mut dense = zeros::<T>(self.q.rows());
        for ((&j, &p), &t) in support.iter().zip(&rho).zip(&theta) {
            dense[j] = Complex::from_polar(p, t);
        }
        Some((dense, self.dual_value(&y)))
    }

    /// Exact least-squares fit on `support`, plus the dual value of a point
    /// that matches its sign pattern there.
    ///
    /// `lambda` is an approximate subgradient of `||x||_1` at the optimum
    /// (the scaled ADMM multiplier); it fixes the dual off the support.
    fn polish(&self, support: &[usize], lambda: &[Complex<T>]) -> Option<(Vec<Complex<T>>, T)> {
        let r = self.q.cols();
        let k = support.len();
        if k == 0 || k > r {
            return None;
        }
        let a_s = self.restricted(support);
        let qr = PivotedQr::new(&a_s);
        if qr.rank() < k {
            return None;
        }
        let (xs, res) = qr.solve_least_squares(&self.w);
        if !(res <= T::lit(1e3) * T::epsilon()) || xs.iter().any(|v| v.norm() == T::zero()) {
            return None;
        }
        let sgn: Vec<Complex<T>> = xs.iter().map(|&z| phase(z)).collect();
        let all: Vec<usize> = (0..k).collect();
        let chol = Cholesky::new(&a_s.gram_of(&all))?;
        let mut dual = T::neg_infinity();
        let y_lambda = self.q.adjoint_mul_vec(lambda);
        for base in [zeros::<T>(r), y_lambda.clone()] {
            let on_support = a_s.adjoint_mul_vec(&base);
            let d: Vec<_> = sgn.iter().zip(&on_support).map(|(s, o)| s - o).collect();
            let t = chol.solve(&d);
            let corr = a_s.mul_vec(&t);
            let y: Vec<_> = base.iter().zip(&corr).map(|(a, b)| a + b).collect();
            dual = dual.max(self.dual_value(&y));
        }
        // When x sits on the boundary of recoverability the dual constraint
        // is also tight off the support. Pin the nearly tight entries of the
        // multiplier's dual to unit modulus as well.
        let g = self.q.mul_vec(&y_lambda);
        let mut last_len = 0;
        for slack in [T::lit(1e-8), T::lit(1e-6), T::lit(1e-4), T::lit(1e-2)] {
            let active: Vec<usize> = (0..g.len())
                .filter(|&j| g[j].norm() >= T::one() - slack && !support.contains(&j))
                .collect();
            if active.is_empty() || active.len() == last_len || k + active.len() > r {
                continue;
            }
            last_len = active.len();
            let mut idx = support.to_vec();
            idx.extend(&active);
            let m = self.restricted(&idx);
            let Some(ch) = Cholesky::new(&m.gram_of(&(0..idx.len()).collect::<Vec<_>>())) else { continue };
            let target: Vec<_> = sgn.iter().copied().chain(active.iter().map(|&j| phase(g[j]))).collect();
            let cur = m.adjoint_mul_vec(&y_lambda);
            let d: Vec<_> = target.iter().zip(&cur).map(|(s, o)| s - o).collect();
            let corr = m.mul_vec(&ch.solve(&d));
            let y: Vec<_> = y_lambda.iter().zip(&corr).map(|(a, b)| a + b).collect();
            dual = dual.max(self.dual_value(&y));
        }
        let mut dense = zeros::<T>(self.q.rows());
        for (&j, v) in support.iter().zip(&xs) {
            dense[j] = *v;
        }
        Some((dense, dual))
    }
}

fn nonzero_support<T: Real>(z: &[Complex<T>]) -> Vec<usize> {
    z.iter()
        .enumerate()
        .filter(|(_, v)| v.re != T::zero() || v.im != T::zero())
        .map(|(j, _)| j)
        .collect()
}

/// Collects feasible candidates and dual lower bounds until a candidate is
/// within the gap tolerance of the best bound.
struct Certifier<'a, T> {
    prob: &'a Reduced<'a, T>,
    gap_tol: T,
    best_dual: T,
    last_supports: Vec<Vec<usize>>,
    newton_tried: Vec<Vec<usize>>,
}

impl<T: Real> Certifier<'_, T> {
    /// Supports of `z` above a few relative thresholds; small spurious
    /// entries would otherwise spoil the sign pattern of the refit.
    fn supports(z: &[Complex<T>]) -> Vec<Vec<usize>> {
        let top = norm_inf(z);
        let mut out: Vec<Vec<usize>> = Vec::new();
        for rel in [T::zero(), T::lit(1e-9), T::lit(1e-6), T::lit(1e-3)] {
            let s: Vec<usize> = (0..z.len()).filter(|&j| z[j].norm() > rel * top).collect();
            if !s.is_empty() && !out.contains(&s) {
                out.push(s);
            }
        }
        out
    }

    fn refits(&mut self, z: &[Complex<T>], lambda: &[Complex<T>], force: bool) -> Vec<Vec<Complex<T>>> {
        let r = self.prob.q.cols();
        let supports = Self::supports(z);
        let stable = supports == self.last_supports;
        let mut out = Vec::new();
        if force || !stable {
            // supports are nested; once one fits exactly, its supersets
            // only add spurious near-zero entries
            for s in supports.iter().rev().filter(|s| s.len() <= r) {
                if let Some((x, dual)) = self.prob.polish(s, lambda) {
                    self.best_dual = self.best_dual.max(dual);
                    out.push(x);
                    break;
                }
            }
        }
        // the Newton system is larger, so wait until the support settles
        if stable && (force || supports != self.newton_tried) {
            let y0 = self.prob.q.adjoint_mul_vec(lambda);
            for s in supports.iter().rev().filter(|s| s.len() > r) {
                if let Some((x, dual)) = self.prob.newton(s, z, &y0) {
                    self.best_dual = self.best_dual.max(dual);
                    out.push(x);
                }
            }
            self.newton_tried = supports.clone();
        }
        self.last_supports = supports;
        out
    }

    fn certified(&self, x: &[Complex<T>]) -> bool {
        let p = norm1(x);
        p - self.best_dual <= self.gap_tol * p
    }

    /// One certification attempt at the current ADMM state.
    fn attempt(&mut self, z: &[Complex<T>], lambda: &[Complex<T>], force: bool) -> Option<(Vec<Complex<T>>, T)> {
        let y = self.prob.q.adjoint_mul_vec(lambda);
        self.best_dual = self.best_dual.max(self.prob.dual_value(&y));
        let mut cands = self.refits(z, lambda, force);
        if self.certified(z) {
            // the iterate is nearly optimal; make it exactly feasible and
            // also refit the support of the corrected point
            if let Some(xc) = self.prob.feasible_on_support(z) {
                cands.extend(self.refits(&xc, lambda, true));
                cands.push(xc);
            }
        }
        cands
            .into_iter()
            .filter(|x| self.certified(x))
            .min_by(|a, b| norm1(a).partial_cmp(&norm1(b)).unwrap_or(std::cmp::Ordering::Equal))
            .map(|x| {
                let gap = (norm1(&x) - self.best_dual).max(T::zero());
                (x, gap)
            })
    }
}

fn finish<T: Real>(
    a: &CMat<T>,
    b: &[Complex<T>],
    dense: Vec<Complex<T>>,
    iterations: usize,
    gap: T,
    status: SolveStatus,
    opts: &SolverOptions<T>,
) -> SolveReport<T> {
    let solution = SparseCoefficients::from_dense(&dense, opts.support_tol);
    let ax = a.mul_vec(&solution.to_dense());
    let resid: Vec<_> = ax.iter().zip(b).map(|(u, v)| u - v).collect();
    SolveReport {
        objective: solution.norm1(),
        solution,
        iterations,
        primal_residual: norm2(&resid),
        duality_gap_bound: gap,
        status,
    }
}

/// Basis pursuit, `min sum_j |x_j|` subject to `A x = b`.
///
/// The constraint is first rewritten on an orthonormal basis of the row
/// space of `A`, which detects inconsistent right-hand sides and handles
/// rank-deficient `A`. The program is then solved by over-relaxed ADMM with
/// complex soft thresholding and residual balancing of the penalty. Every
/// few iterations the support of the iterate is refitted by least squares;
/// a candidate is accepted once its objective is within the gap tolerance
/// of the best dual lower bound found so far.
pub fn basis_pursuit<T: Real>(a: &CMat<T>, b: &[Complex<T>], opts: &SolverOptions<T>) -> Result<SolveReport<T>> {
    BasisPursuit::new(a).solve(b, opts)
}

/// Basis pursuit with the row-space factorization of `A` computed once and
/// reused across right-hand sides.
pub struct BasisPursuit<'a, T> {
    a: &'a CMat<T>,
    rs: RowSpace<T>,
}

impl<'a, T: Real> BasisPursuit<'a, T> {
    pub fn new(a: &'a CMat<T>) -> Self {
        Self { a, rs: RowSpace::new(a) }
    }

    pub fn solve(&self, b: &[Complex<T>], opts: &SolverOptions<T>) -> Result<SolveReport<T>> {
        solve_prepared(self.a, &self.rs, b, opts)
    }
}

fn solve_prepared<T: Real>(a: &CMat<T>, rs: &RowSpace<T>, b: &[Complex<T>], opts: &SolverOptions<T>) -> Result<SolveReport<T>> {
    if b.len() != a.rows() {
        return Err(Error::Dimension(format!("rhs has length {}, matrix has {} rows", b.len(), a.rows())));
    }
    let n_cols = a.cols();
    let bnorm = norm2(b);
    let feas_tol = opts.feas_tol * (T::one() + bnorm);
    if bnorm == T::zero() {
        return Ok(trivial_report(n_cols, T::zero(), SolveStatus::Optimal));
    }
    let (w, inconsistency) = rs.reduce(b);
    if inconsistency > feas_tol {
        return Ok(trivial_report(n_cols, inconsistency, SolveStatus::Infeasible));
    }
    let scale = norm2(&w);
    let prob = Reduced { q: rs.basis(), w: w.iter().map(|z| z / scale).collect() };
    let mut cert = Certifier { prob: &prob, gap_tol: opts.gap_tol, best_dual: T::neg_infinity(), last_supports: Vec::new(), newton_tried: Vec::new() };

    let alpha = opts.relaxation;
    let mut rho = opts.rho;
    let sqrt_n = T::lit(n_cols as f64).sqrt();
    let every = opts.polish_every.max(1);
    let mut z = prob.q.mul_vec(&prob.w);
    let mut u = zeros::<T>(n_cols);
    let mut x = zeros::<T>(n_cols);
    let mut v = zeros::<T>(n_cols);
    let mut z_old = zeros::<T>(n_cols);
    let two = T::lit(2.0);
    let ten = T::lit(10.0);

    for it in 1..=opts.max_iter {
        for ((vi, zi), ui) in v.iter_mut().zip(&z).zip(&u) {
            *vi = zi - ui;
        }
        prob.project_into(&v, &mut x);
        std::mem::swap(&mut z, &mut z_old);
        let inv_rho = T::one() / rho;
        let (mut r_pri2, mut r_dual2, mut xn2, mut zn2, mut un2) = (T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
        for j in 0..n_cols {
            let xh = x[j] * alpha + z_old[j] * (T::one() - alpha);
            let zj = soft_threshold(xh + u[j], inv_rho);
            u[j] = u[j] + xh - zj;
            z[j] = zj;
            r_pri2 = r_pri2 + (x[j] - zj).norm_sqr();
            r_dual2 = r_dual2 + (zj - z_old[j]).norm_sqr();
            xn2 = xn2 + x[j].norm_sqr();
            zn2 = zn2 + zj.norm_sqr();
            un2 = un2 + u[j].norm_sqr();
        }
        let r_pri = r_pri2.sqrt();
        let r_dual = rho * r_dual2.sqrt();
        let eps_pri = sqrt_n * opts.abs_tol + opts.rel_tol * xn2.max(zn2).sqrt();
        let eps_dual = sqrt_n * opts.abs_tol + opts.rel_tol * rho * un2.sqrt();
        let converged = r_pri <= eps_pri && r_dual <= eps_dual;

        if converged || it % every == 0 {
            let lambda: Vec<_> = u.iter().map(|ui| ui * rho).collect();
            if let Some((xs, gap)) = cert.attempt(&z, &lambda, converged || it % (10 * every) == 0) {
                let dense: Vec<_> = xs.iter().map(|v| v * scale).collect();
                let report = finish(a, b, dense, it, gap * scale, SolveStatus::Optimal, opts);
                if report.primal_residual <= feas_tol {
                    return Ok(report);
                }
            }
        }

        if it % 5 == 0 {
            if r_pri > ten * r_dual {
                rho = rho * two;
                u.iter_mut().for_each(|ui| *ui = *ui / two);
            } else if r_dual > ten * r_pri {
                rho = rho / two;
                u.iter_mut().for_each(|ui| *ui = *ui * two);
            }
        }
    }

    let last = prob.feasible_on_support(&z).unwrap_or(z);
    let gap = (norm1(&last) - cert.best_dual).max(T::zero()) * scale;
    let dense: Vec<_> = last.iter().map(|v| v * scale).collect();
    Ok(finish(a, b, dense, opts.max_iter, gap, SolveStatus::MaxIter, opts))
}
