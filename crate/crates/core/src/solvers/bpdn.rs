use num_complex::Complex;

use super::bp::{basis_pursuit, trivial_report};
use super::{SolveReport, SolveStatus, SolverOptions};
use crate::error::{Error, Result};
use crate::linalg::{CMat, Cholesky, PivotedQr};
use crate::scalar::{inner, norm1, norm2, norm_inf, phase, soft_threshold, Real};
use crate::sparse::SparseCoefficients;

fn sub<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Vec<Complex<T>> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn add<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Vec<Complex<T>> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Projection onto the closed ball of radius `delta` around `center`.
fn project_ball<T: Real>(v: &[Complex<T>], center: &[Complex<T>], delta: T) -> Vec<Complex<T>> {
    let d = sub(v, center);
    let nd = norm2(&d);
    if nd <= delta {
        return v.to_vec();
    }
    let s = delta / nd;
    center.iter().zip(&d).map(|(c, di)| c + di * s).collect()
}

/// Dual value `Re<b, y> - delta ||y||` after scaling `y` into `||A* y||_inf <= 1`.
fn dual_value<T: Real>(a: &CMat<T>, b: &[Complex<T>], delta: T, y: &[Complex<T>]) -> T {
    let c = norm_inf(&a.adjoint_mul_vec(y));
    if c == T::zero() {
        return T::zero();
    }
    (inner(b, y).re - delta * norm2(y)) / c
}

struct Candidate<T> {
    dense: Vec<Complex<T>>,
    gap: T,
}

/// Optimality residual on a fixed support: `G x - c + tau phase(x)` stacked
/// as real pairs, followed by `||A_S x - b||^2 - delta^2`.
fn support_residual<T: Real>(g: &CMat<T>, c: &[Complex<T>], a_s: &CMat<T>, b: &[Complex<T>], delta: T, x: &[Complex<T>], tau: T) -> Vec<T> {
    let gx = g.mul_vec(x);
    let mut f = Vec::with_capacity(2 * x.len() + 1);
    for j in 0..x.len() {
        let v = gx[j] - c[j] + phase(x[j]) * tau;
        f.push(v.re);
        f.push(v.im);
    }
    let r = sub(&a_s.mul_vec(x), b);
    let rn = norm2(&r);
    f.push(rn * rn - delta * delta);
    f
}

fn real_norm<T: Real>(v: &[T]) -> T {
    v.iter().map(|t| *t * *t).sum::<T>().sqrt()
}

/// Optimal point on a fixed support `S`: `G x_S = A_S* b - tau phase(x_S)`
/// with `tau > 0` chosen so the residual has norm `delta`.
///
/// Solved by damped Newton iteration on the real form of the system,
/// started from the entries of `start` on `S`.
fn polish<T: Real>(a: &CMat<T>, b: &[Complex<T>], delta: T, support: &[usize], start: &[Complex<T>]) -> Option<Candidate<T>> {
    let k = support.len();
    if k == 0 || k > a.rows() {
        return None;
    }
    let a_s = a.select_columns(support);
    if PivotedQr::new(&a_s).rank() < k {
        return None;
    }
    let g = a_s.gram_of(&(0..k).collect::<Vec<_>>());
    let chol = Cholesky::new(&g)?;
    let c = a_s.adjoint_mul_vec(b);
    let x0 = chol.solve(&c);
    let r0 = norm2(&sub(&a_s.mul_vec(&x0), b));
    if r0 >= delta {
        return None;
    }
    // start from the iterate itself, with tau read off its correlations
    let mut xs: Vec<Complex<T>> = support.iter().map(|&j| start[j]).collect();
    if xs.iter().any(|z| z.norm() == T::zero()) {
        return None;
    }
    let h = sub(&c, &g.mul_vec(&xs));
    let mut tau = h.iter().map(|v| v.norm()).sum::<T>() / T::lit(k as f64);
    let m = 2 * k + 1;
    let scale = T::one() + norm_inf(&c);
    let tol = T::lit(64.0) * T::epsilon() * scale;
    let mut f = support_residual(&g, &c, &a_s, b, delta, &xs, tau);
    let mut fnorm = real_norm(&f);
    let mut settled = fnorm <= tol;
    for _ in 0..50 {
        if settled {
            break;
        }
        let h = sub(&g.mul_vec(&xs), &c);
        let mut jac = vec![T::zero(); m * m];
        for j in 0..k {
            for l in 0..k {
                let z = g[(j, l)];
                jac[(2 * j) * m + 2 * l] = z.re;
                jac[(2 * j) * m + 2 * l + 1] = -z.im;
                jac[(2 * j + 1) * m + 2 * l] = z.im;
                jac[(2 * j + 1) * m + 2 * l + 1] = z.re;
            }
            let r = xs[j].norm();
            let ph = phase(xs[j]);
            let w = tau / r;
            // tau * (I - phi phi^T) / |x_j| in real coordinates
            jac[(2 * j) * m + 2 * j] = jac[(2 * j) * m + 2 * j] + w * (T::one() - ph.re * ph.re);
            jac[(2 * j) * m + 2 * j + 1] = jac[(2 * j) * m + 2 * j + 1] - w * ph.re * ph.im;
            jac[(2 * j + 1) * m + 2 * j] = jac[(2 * j + 1) * m + 2 * j] - w * ph.re * ph.im;
            jac[(2 * j + 1) * m + 2 * j + 1] = jac[(2 * j + 1) * m + 2 * j + 1] + w * (T::one() - ph.im * ph.im);
            jac[(2 * j) * m + 2 * k] = ph.re;
            jac[(2 * j + 1) * m + 2 * k] = ph.im;
            let two = T::lit(2.0);
            jac[(2 * k) * m + 2 * j] = two * h[j].re;
            jac[(2 * k) * m + 2 * j + 1] = two * h[j].im;
        }
        let mut step: Vec<T> = f.iter().map(|v| -*v).collect();
        if !crate::linalg::real_solve(&mut jac, &mut step, m) {
            return None;
        }
        let mut t = T::one();
        let mut moved = false;
        for _ in 0..30 {
            let xn: Vec<_> = (0..k).map(|j| xs[j] + Complex::new(step[2 * j], step[2 * j + 1]) * t).collect();
            let tn = tau + step[2 * k] * t;
            if tn > T::zero() && xn.iter().all(|z| z.norm() > T::zero()) {
                let fnew = support_residual(&g, &c, &a_s, b, delta, &xn, tn);
                let nn = real_norm(&fnew);
                if nn < fnorm {
                    xs = xn;
                    tau = tn;
                    f = fnew;
                    fnorm = nn;
                    moved = true;
                    break;
                }
            }
            t = t / T::lit(2.0);
        }
        settled = fnorm <= tol;
        if !moved {
            break;
        }
    }
    if !settled || !(tau > T::zero()) {
        return None;
    }
    let mut dense = vec![Complex::new(T::zero(), T::zero()); a.cols()];
    for (&j, v) in support.iter().zip(&xs) {
        dense[j] = *v;
    }
    let resid = sub(b, &a.mul_vec(&dense));
    let gap = (norm1(&xs) - dual_value(a, b, delta, &resid)).max(T::zero());
    Some(Candidate { dense, gap })
}

/// Residual of the primal-dual optimality system on a fixed support:
/// `A_S* y - phase(x)`, `A_S x + tau y - b` and `tau ||y|| - delta`.
fn pd_residual<T: Real>(a_s: &CMat<T>, b: &[Complex<T>], delta: T, x: &[Complex<T>], y: &[Complex<T>], tau: T) -> Vec<T> {
    let mut f = Vec::with_capacity(2 * (x.len() + y.len()) + 1);
    for (g, xj) in a_s.adjoint_mul_vec(y).iter().zip(x) {
        let v = g - phase(*xj);
        f.push(v.re);
        f.push(v.im);
    }
    for ((ax, yi), bi) in a_s.mul_vec(x).iter().zip(y).zip(b) {
        let v = ax + yi * tau - bi;
        f.push(v.re);
        f.push(v.im);
    }
    f.push(tau * norm2(y) - delta);
    f
}

/// Optimal point on a fixed support together with its dual vector `y`,
/// `x` having phases `A_S* y` and residual `b - A_S x = tau y` of norm
/// `delta`.
///
/// Unlike [`polish`] this stays well conditioned as `delta -> 0` and allows
/// supports larger than the number of rows. The dual start is the
/// least-squares solution of `A_S* y = phase(z_S)`.
fn polish_primal_dual<T: Real>(a: &CMat<T>, b: &[Complex<T>], delta: T, support: &[usize], start: &[Complex<T>]) -> Option<Candidate<T>> {
    let k = support.len();
    let m = a.rows();
    if k == 0 || k > 2 * m {
        return None;
    }
    let mut xs: Vec<Complex<T>> = support.iter().map(|&j| start[j]).collect();
    if xs.iter().any(|z| z.norm() == T::zero()) {
        return None;
    }
    let a_s = a.select_columns(support);
    let phases: Vec<_> = xs.iter().map(|z| phase(*z)).collect();
    let (mut y, _) = PivotedQr::new(&a_s.adjoint()).solve_least_squares(&phases);
    let yn = norm2(&y);
    if yn == T::zero() {
        return None;
    }
    let mut tau = delta / yn;
    let dim = 2 * (k + m) + 1;
    let tol = T::lit(256.0) * T::epsilon() * (T::one() + norm2(b));
    let mut f = pd_residual(&a_s, b, delta, &xs, &y, tau);
    let mut fnorm = real_norm(&f);
    let (oy, ot) = (2 * k, 2 * (k + m));
    for _ in 0..50 {
        if fnorm <= tol {
            break;
        }
        let mut jac = vec![T::zero(); dim * dim];
        let mut set = |r: usize, c: usize, v: T| jac[r * dim + c] = v;
        let yn = norm2(&y);
        for j in 0..k {
            // d phase(x) = (I - phi phi^T) dx / |x| in real coordinates
            let ph = phase(xs[j]);
            let w = T::one() / xs[j].norm();
            set(2 * j, 2 * j, -w * (T::one() - ph.re * ph.re));
            set(2 * j, 2 * j + 1, w * ph.re * ph.im);
            set(2 * j + 1, 2 * j, w * ph.re * ph.im);
            set(2 * j + 1, 2 * j + 1, -w * (T::one() - ph.im * ph.im));
            for i in 0..m {
                let g = a_s[(i, j)];
                let gc = g.conj();
                // rows of A_S* y
                set(2 * j, oy + 2 * i, gc.re);
                set(2 * j, oy + 2 * i + 1, -gc.im);
                set(2 * j + 1, oy + 2 * i, gc.im);
                set(2 * j + 1, oy + 2 * i + 1, gc.re);
                // rows of A_S x
                let r = 2 * k + 2 * i;
                set(r, 2 * j, g.re);
                set(r, 2 * j + 1, -g.im);
                set(r + 1, 2 * j, g.im);
                set(r + 1, 2 * j + 1, g.re);
            }
        }
        for i in 0..m {
            let r = 2 * k + 2 * i;
            set(r, oy + 2 * i, tau);
            set(r + 1, oy + 2 * i + 1, tau);
            set(r, ot, y[i].re);
            set(r + 1, ot, y[i].im);
            set(ot, oy + 2 * i, tau * y[i].re / yn);
            set(ot, oy + 2 * i + 1, tau * y[i].im / yn);
        }
        set(ot, ot, yn);
        let mut step: Vec<T> = f.iter().map(|v| -*v).collect();
        if !crate::linalg::real_solve(&mut jac, &mut step, dim) {
            return None;
        }
        let mut t = T::one();
        let mut moved = false;
        for _ in 0..30 {
            let xn: Vec<_> = (0..k).map(|j| xs[j] + Complex::new(step[2 * j], step[2 * j + 1]) * t).collect();
            let ynew: Vec<_> = (0..m).map(|i| y[i] + Complex::new(step[oy + 2 * i], step[oy + 2 * i + 1]) * t).collect();
            let tn = tau + step[ot] * t;
            if tn >= T::zero() && xn.iter().all(|z| z.norm() > T::zero()) {
                let fnew = pd_residual(&a_s, b, delta, &xn, &ynew, tn);
                let nn = real_norm(&fnew);
                if nn < fnorm {
                    (xs, y, tau, f, fnorm) = (xn, ynew, tn, fnew, nn);
                    moved = true;
                    break;
                }
            }
            t = t / T::lit(2.0);
        }
        if !moved {
            break;
        }
    }
    if fnorm > tol {
        return None;
    }
    let mut dense = vec![Complex::new(T::zero(), T::zero()); a.cols()];
    for (&j, v) in support.iter().zip(&xs) {
        dense[j] = *v;
    }
    let gap = (norm1(&xs) - dual_value(a, b, delta, &y)).max(T::zero());
    Some(Candidate { dense, gap })
}

/// Polishes the support of `z` and its thresholded subsets, returning the
/// candidate with the smallest gap.
/// The primal-dual polish runs when the fixed-support one fails or leaves a
/// gap above `gap_tol`.
fn refine<T: Real>(a: &CMat<T>, b: &[Complex<T>], delta: T, z: &[Complex<T>], gap_tol: T) -> Option<Candidate<T>> {
    let zmax = norm_inf(z);
    let mut last: Vec<usize> = Vec::new();
    let mut best: Option<Candidate<T>> = None;
    for rel in [0.0, 1e-6, 1e-3, 1e-2] {
        let cut = T::lit(rel) * zmax;
        let support: Vec<usize> = (0..z.len()).filter(|&j| z[j].norm() > cut).collect();
        if support.is_empty() || support == last {
            continue;
        }
        let mut cands: Vec<Candidate<T>> = polish(a, b, delta, &support, z).into_iter().collect();
        if cands.iter().all(|c| c.gap > gap_tol * norm1(&c.dense)) {
            cands.extend(polish_primal_dual(a, b, delta, &support, z));
        }
        for c in cands {
            if best.as_ref().is_none_or(|bc| c.gap < bc.gap) {
                best = Some(c);
            }
        }
        last = support;
    }
    best
}

fn finish<T: Real>(
    a: &CMat<T>,
    b: &[Complex<T>],
    delta: T,
    dense: &[Complex<T>],
    iterations: usize,
    gap: T,
    status: SolveStatus,
    opts: &SolverOptions<T>,
) -> SolveReport<T> {
    let solution = SparseCoefficients::from_dense(dense, opts.support_tol);
    let excess = norm2(&sub(&a.mul_vec(&solution.to_dense()), b)) - delta;
    SolveReport {
        objective: solution.norm1(),
        solution,
        iterations,
        primal_residual: excess.max(T::zero()),
        duality_gap_bound: gap,
        status,
    }
}

/// Basis pursuit denoising, `min sum_j |x_j|` subject to `||A x - b||_2 <= delta`.
///
/// With `delta = 0` this is [`basis_pursuit`]. Otherwise the program is split
/// as `x = z`, `A x = v` and solved by over-relaxed ADMM, where `z` is soft
/// thresholded and `v` projected onto the ball around `b`. The iterate's
/// support is periodically refitted to an exact optimality point and
/// accepted once a dual certificate closes the gap.
pub fn bpdn<T: Real>(a: &CMat<T>, b: &[Complex<T>], delta: T, opts: &SolverOptions<T>) -> Result<SolveReport<T>> {
    if b.len() != a.rows() {
        return Err(Error::Dimension(format!("rhs has length {}, matrix has {} rows", b.len(), a.rows())));
    }
    if !(delta >= T::zero()) || !delta.is_finite() {
        return Err(Error::Domain(format!("noise level must be finite and non-negative, got {delta}")));
    }
    if delta == T::zero() {
        return basis_pursuit(a, b, opts);
    }
    let n_cols = a.cols();
    let bnorm = norm2(b);
    if bnorm <= delta {
        return Ok(trivial_report(n_cols, T::zero(), SolveStatus::Optimal));
    }
    let feas_tol = opts.feas_tol * (T::one() + bnorm);

    // work with ||b|| = 1
    let scale = bnorm;
    let bs: Vec<_> = b.iter().map(|z| z / scale).collect();
    let ds = delta / scale;
    let accept = |c: &Candidate<T>, it: usize| -> Option<SolveReport<T>> {
        if c.gap > opts.gap_tol * norm1(&c.dense) {
            return None;
        }
        let dense: Vec<_> = c.dense.iter().map(|v| v * scale).collect();
        let rep = finish(a, b, delta, &dense, it, c.gap * scale, SolveStatus::Optimal, opts);
        (rep.primal_residual <= feas_tol).then_some(rep)
    };

    let mut shifted = a.outer_gram();
    for i in 0..a.rows() {
        shifted[(i, i)] = shifted[(i, i)] + T::one();
    }
    let chol = Cholesky::new(&shifted).ok_or_else(|| Error::Degenerate("I + A A* is not positive definite".into()))?;
    let x_update = |rhs: Vec<Complex<T>>| {
        let t = chol.solve(&a.mul_vec(&rhs));
        sub(&rhs, &a.adjoint_mul_vec(&t))
    };

    let alpha = opts.relaxation;
    let mut rho = opts.rho;
    let dim = T::lit((n_cols + a.rows()) as f64).sqrt();
    let zero = Complex::new(T::zero(), T::zero());
    let mut z = vec![zero; n_cols];
    let mut v = project_ball(&vec![zero; a.rows()], &bs, ds);
    let mut u1 = vec![zero; n_cols];
    let mut u2 = vec![zero; a.rows()];
    let mut last_support: Vec<usize> = Vec::new();
    let every = opts.polish_every.max(1);

    for it in 1..=opts.max_iter {
        let x = x_update(add(&sub(&z, &u1), &a.adjoint_mul_vec(&sub(&v, &u2))));
        let ax = a.mul_vec(&x);
        let xh1: Vec<_> = x.iter().zip(&z).map(|(p, q)| p * alpha + q * (T::one() - alpha)).collect();
        let xh2: Vec<_> = ax.iter().zip(&v).map(|(p, q)| p * alpha + q * (T::one() - alpha)).collect();
        let z_old = std::mem::take(&mut z);
        let v_old = std::mem::take(&mut v);
        let inv_rho = T::one() / rho;
        z = xh1.iter().zip(&u1).map(|(p, q)| soft_threshold(p + q, inv_rho)).collect();
        v = project_ball(&add(&xh2, &u2), &bs, ds);
        for ((ui, p), q) in u1.iter_mut().zip(&xh1).zip(&z) {
            *ui = *ui + p - q;
        }
        for ((ui, p), q) in u2.iter_mut().zip(&xh2).zip(&v) {
            *ui = *ui + p - q;
        }

        let r1 = norm2(&sub(&x, &z));
        let r2 = norm2(&sub(&ax, &v));
        let r_pri = (r1 * r1 + r2 * r2).sqrt();
        let dz = sub(&z, &z_old);
        let dv = a.adjoint_mul_vec(&sub(&v, &v_old));
        let r_dual = rho * norm2(&add(&dz, &dv));
        let scale_pri = norm2(&x).max(norm2(&z)).max(norm2(&ax)).max(norm2(&v));
        let eps_pri = dim * opts.abs_tol + opts.rel_tol * scale_pri;
        let u_back = add(&u1, &a.adjoint_mul_vec(&u2));
        let eps_dual = dim * opts.abs_tol + opts.rel_tol * rho * norm2(&u_back);
        let converged = r_pri <= eps_pri && r_dual <= eps_dual;

        if converged || it % every == 0 {
            let support: Vec<usize> = z
                .iter()
                .enumerate()
                .filter(|(_, w)| w.norm() > T::zero())
                .map(|(j, _)| j)
                .collect();
            if converged || support != last_support || it % (10 * every) == 0 {
                if let Some(rep) = refine(a, &bs, ds, &z, opts.gap_tol).and_then(|c| accept(&c, it)) {
                    return Ok(rep);
                }
                last_support = support;
            }
        }
        if converged {
            let resid = sub(&bs, &a.mul_vec(&z));
            let gap = (norm1(&z) - dual_value(a, &bs, ds, &resid)).max(T::zero());
            if let Some(rep) = accept(&Candidate { dense: z.clone(), gap }, it) {
                return Ok(rep);
            }
        }

        if it % 5 == 0 {
            let ten = T::lit(10.0);
            let two = T::lit(2.0);
            if r_pri > ten * r_dual {
                rho = rho * two;
                u1.iter_mut().chain(u2.iter_mut()).for_each(|ui| *ui = *ui / two);
            } else if r_dual > ten * r_pri {
                rho = rho / two;
                u1.iter_mut().chain(u2.iter_mut()).for_each(|ui| *ui = *ui * two);
            }
        }
    }

    let resid = sub(&bs, &a.mul_vec(&z));
    let gap = (norm1(&z) - dual_value(a, &bs, ds, &resid)).max(T::zero()) * scale;
    let dense: Vec<_> = z.iter().map(|w| w * scale).collect();
    Ok(finish(a, b, delta, &dense, opts.max_iter, gap, SolveStatus::MaxIter, opts))
}
