//! Coherence, restricted isometry diagnostics and evaluators for the
//! recovery guarantees attached to them.
//!
//! All logarithms in the bound formulas are natural logarithms.

use std::collections::BTreeMap;
use std::f64::consts::{E, LN_2};

use num_complex::Complex;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::combinatorics::{binomial, Combinations};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, CMat};
use crate::scalar::{inner, norm2, Real};
use crate::tfshift::{tf_shift, AtomLabel, MeasurementMatrix, TfIndex, Window, WindowKind};

/// Largest number of supports [`restricted_isometry_constant`] will visit.
pub const RIC_BUDGET: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoherenceReport<T> {
    pub mu: T,
    pub argmax_pair: (AtomLabel, AtomLabel),
    /// Welch-type lower bound `1/sqrt(n+1)` for `n^2`-atom Gabor systems, else 0.
    pub lower_bound: T,
}

/// Coherence `max_{r != s} |<a_r, a_s>|` over all column pairs.
///
/// Columns must have unit norm to within `1e-8`. Ties keep the first pair in
/// lexicographic order.
pub fn coherence<T: Real>(a: &MeasurementMatrix<T>) -> Result<CoherenceReport<T>> {
    let m = a.matrix();
    let tol = T::lit(1e-8).max(T::lit(16.0) * T::epsilon().sqrt());
    for (j, c) in m.columns().enumerate() {
        let nrm = norm2(c);
        if (nrm - T::one()).abs() > tol {
            return Err(Error::Normalization { column: j, norm: nrm.as_f64() });
        }
    }
    let n = m.cols();
    if n < 2 {
        return Err(Error::Degenerate("coherence needs at least two columns".into()));
    }
    let best = (0..n - 1)
        .into_par_iter()
        .map(|r| {
            let cr = m.col(r);
            let mut best = (T::neg_infinity(), r, r + 1);
            for s in r + 1..n {
                let v = inner(cr, m.col(s)).norm();
                if v > best.0 {
                    best = (v, r, s);
                }
            }
            best
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((T::neg_infinity(), 0, 1), |acc, b| if b.0 > acc.0 { b } else { acc });
    let labels = a.column_map();
    let lower_bound = if a.is_full_gabor() {
        T::one() / T::lit((m.rows() + 1) as f64).sqrt()
    } else {
        T::zero()
    };
    Ok(CoherenceReport { mu: best.0, argmax_pair: (labels[best.1], labels[best.2]), lower_bound })
}

/// Coherence of the Gabor system generated by `h`.
///
/// Because time-frequency shifts form a group up to phases, it is enough to
/// compare every shift against `h` itself: for each translation `p` the
/// inner products over all modulations `ell` form one length-`n` Fourier
/// transform of `q -> h[p+q] conj(h[q])`. The window must have unit norm.
pub fn gabor_coherence<T: Real>(h: &Window<T>) -> CoherenceReport<T> {
    let n = h.len();
    let e = h.entries();
    let mut planner = FftPlanner::<T>::new();
    let fft = planner.plan_fft_inverse(n);
    let mut best = (T::neg_infinity(), TfIndex { ell: 0, p: 0 });
    let mut buf = vec![Complex::new(T::zero(), T::zero()); n];
    for p in 0..n {
        for (q, slot) in buf.iter_mut().enumerate() {
            *slot = e[(p + q) % n] * e[q].conj();
        }
        fft.process(&mut buf);
        for (ell, v) in buf.iter().enumerate() {
            if ell == 0 && p == 0 {
                continue;
            }
            let m = v.norm();
            if m > best.0 || (m == best.0 && TfIndex { ell, p }.column(n) < best.1.column(n)) {
                best = (m, TfIndex { ell, p });
            }
        }
    }
    let (mu, idx) = if n == 1 { (T::zero(), TfIndex { ell: 0, p: 0 }) } else { best };
    CoherenceReport {
        mu,
        argmax_pair: (AtomLabel::Tf(TfIndex { ell: 0, p: 0 }), AtomLabel::Tf(idx)),
        lower_bound: T::one() / T::lit((n + 1) as f64).sqrt(),
    }
}

/// Brute-force reference for [`gabor_coherence`]: explicit shifts and inner products.
pub fn gabor_coherence_direct<T: Real>(h: &Window<T>) -> T {
    let n = h.len();
    let mut mu = T::zero();
    for ell in 0..n {
        for p in 0..n {
            if ell == 0 && p == 0 {
                continue;
            }
            let s = tf_shift(h, TfIndex { ell, p }).expect("indices below n");
            mu = mu.max(inner(&s, h.entries()).norm());
        }
    }
    mu
}

/// Spectral norm of `A_L* A_L - I` for the columns listed in `lambda`.
pub fn gram_deviation<T: Real>(a: &MeasurementMatrix<T>, lambda: &[usize]) -> Result<T> {
    gram_deviation_of(a.matrix(), lambda)
}

fn gram_deviation_of<T: Real>(m: &CMat<T>, lambda: &[usize]) -> Result<T> {
    if lambda.is_empty() {
        return Ok(T::zero());
    }
    if let Some(&j) = lambda.iter().find(|&&j| j >= m.cols()) {
        return Err(Error::IndexRange { index: j, len: m.cols() });
    }
    if lambda.len() > m.rows() {
        return Err(Error::Dimension(format!("support of size {} exceeds {} rows", lambda.len(), m.rows())));
    }
    let mut g = m.gram_of(lambda);
    for i in 0..lambda.len() {
        g[(i, i)] = g[(i, i)] - T::one();
    }
    let eig = hermitian_eigenvalues(&g);
    Ok(eig.iter().fold(T::zero(), |acc, v| acc.max(v.abs())))
}

/// Restricted isometry constant `delta_k`: the largest [`gram_deviation`]
/// over supports of size at most `k`.
///
/// Only supports of size exactly `min(k, N)` are visited: the Gram matrix
/// of a sub-support is a principal submatrix, so by eigenvalue interlacing
/// its deviation never exceeds that of any superset.
pub fn restricted_isometry_constant<T: Real>(a: &MeasurementMatrix<T>, k: usize) -> Result<T> {
    let m = a.matrix();
    let n = m.cols();
    let k = k.min(n);
    if k == 0 {
        return Ok(T::zero());
    }
    let count = binomial(n, k);
    if count > RIC_BUDGET {
        return Err(Error::Budget { count, budget: RIC_BUDGET });
    }
    let per_first: Vec<Result<T>> = (0..=n - k)
        .into_par_iter()
        .map(|first| {
            let mut best = T::zero();
            for support in Combinations::starting_with(n, k, first) {
                best = best.max(gram_deviation_of(m, &support)?);
            }
            Ok(best)
        })
        .collect();
    per_first.into_iter().try_fold(T::zero(), |acc, v| Ok(acc.max(v?)))
}

/// Which recovery guarantee a [`GuaranteeReport`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Guarantee {
    /// Exact recovery of all `k`-sparse vectors when `(2k-1) mu < 1`.
    WorstCaseCoherence,
    /// Alltop window: all `k`-sparse matrices when `k < (sqrt(n)+1)/2`.
    AlltopWorstCase,
    /// Random unimodular windows: all `k`-sparse matrices with high probability.
    RandomWindow,
    /// Alltop window, random support and phases.
    AverageCaseAlltop,
    /// `r` random windows, random support and phases.
    AverageCaseRandom,
    /// Tail bound on the coherence of a random-window Gabor system.
    CoherenceTail,
    /// Minimal row count for the restricted isometry property of the Bernoulli ensemble.
    BernoulliRip,
    /// Sparsity thresholds for the Gaussian ensemble.
    GaussianThreshold,
    /// Stable recovery from restricted isometry constants.
    RipStability,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GuaranteeReport {
    pub theorem: Guarantee,
    /// The governing inequality, in plain text.
    pub statement: String,
    /// `true` exactly when `margin > 0`.
    pub holds: bool,
    pub margin: f64,
    /// Lower bound on the success probability, clipped to `[0, 1]`;
    /// 1 for deterministic statements.
    pub probability_floor: f64,
    pub parameters: BTreeMap<String, f64>,
    /// Constants that enter the statement without a known numeric value.
    pub symbolic: Vec<String>,
}

impl GuaranteeReport {
    fn new(theorem: Guarantee, statement: &str, margin: f64, probability_floor: f64) -> Self {
        Self {
            theorem,
            statement: statement.to_string(),
            holds: margin > 0.0,
            margin,
            probability_floor: clip01(probability_floor),
            parameters: BTreeMap::new(),
            symbolic: Vec::new(),
        }
    }

    fn with(mut self, name: &str, value: f64) -> Self {
        self.parameters.insert(name.to_string(), value);
        self
    }

    pub fn parameter(&self, name: &str) -> Option<f64> {
        self.parameters.get(name).copied()
    }
}

fn clip01(p: f64) -> f64 {
    if p.is_nan() {
        0.0
    } else {
        p.clamp(0.0, 1.0)
    }
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::Domain("sparsity k must be at least 1".into()));
    }
    Ok(())
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::Domain(format!("{name} must be positive and finite, got {v}")));
    }
    Ok(())
}

/// Largest `k` with `(2k-1) mu < 1`, or `None` when `mu = 0` (no limit).
pub fn worst_case_k_max(mu: f64) -> Option<u64> {
    if mu <= 0.0 {
        return None;
    }
    let bound = (1.0 / mu + 1.0) / 2.0;
    Some((bound.ceil() - 1.0).max(0.0) as u64)
}

/// Coherence-based worst-case guarantees.
///
/// The report's verdict is the exact-recovery condition `(2k-1) mu < 1`.
/// The stable-recovery condition `(4k-1) mu < 1` is reported through the
/// `stable_margin` parameter, together with the constant
/// `C = 1/(1 - mu (4k-1))` of the error bound
/// `||x' - x||^2 <= (eps + delta)^2 C` when it is defined.
pub fn guarantee_worst_case(mu: f64, k: usize) -> Result<GuaranteeReport> {
    if !(0.0..=1.0 + 1e-12).contains(&mu) {
        return Err(Error::Domain(format!("coherence must lie in [0, 1], got {mu}")));
    }
    check_k(k)?;
    let kf = k as f64;
    let exact = 1.0 - (2.0 * kf - 1.0) * mu;
    let stable = 1.0 - (4.0 * kf - 1.0) * mu;
    let mut rep = GuaranteeReport::new(Guarantee::WorstCaseCoherence, "(2k-1) mu < 1", exact, 1.0)
        .with("mu", mu)
        .with("k", kf)
        .with("stable_margin", stable);
    if stable > 0.0 {
        rep = rep.with("C", 1.0 / stable);
    }
    if let Some(km) = worst_case_k_max(mu) {
        rep = rep.with("k_max", km as f64);
    }
    Ok(rep)
}

/// Worst-case guarantee for the Alltop window of prime length `n`, whose
/// Gabor system has coherence `1/sqrt(n)`: every `k < (sqrt(n)+1)/2` works.
///
/// With `k = None` the report evaluates the largest admissible `k`.
pub fn guarantee_alltop(n: usize, k: Option<usize>) -> Result<GuaranteeReport> {
    if n < 2 {
        return Err(Error::Domain(format!("window length must be at least 2, got {n}")));
    }
    let bound = ((n as f64).sqrt() + 1.0) / 2.0;
    let k_max = (bound.ceil() - 1.0).max(0.0);
    let k = k.map_or(k_max, |k| k as f64);
    let mut rep = GuaranteeReport::new(Guarantee::AlltopWorstCase, "k < (sqrt(n) + 1) / 2", bound - k, 1.0)
        .with("n", n as f64)
        .with("k", k)
        .with("k_max", k_max)
        .with("mu", 1.0 / (n as f64).sqrt());
    if !crate::tfshift::is_prime(n) {
        rep.symbolic.push("coherence 1/sqrt(n) is only established for prime n".into());
    }
    Ok(rep)
}

/// `(1/4) sqrt(r n / (2 ln n + ln 4 + t)) + 1/2`, the sparsity bound for random windows.
pub fn random_window_k_bound(n: usize, t: f64, r: usize) -> f64 {
    let nf = n as f64;
    0.25 * ((r as f64) * nf / (2.0 * nf.ln() + 2.0 * LN_2 + t)).sqrt() + 0.5
}

/// Worst-case guarantee for `r` random unimodular windows of even length `n`.
///
/// Reports `k_max`, the largest integer below [`random_window_k_bound`], and
/// the probability floor `1 - e^{-t}`. With `k` given, the verdict is
/// whether `k` satisfies the bound; otherwise `k_max` is evaluated.
pub fn guarantee_random_window(n: usize, t: f64, r: usize, k: Option<usize>) -> Result<GuaranteeReport> {
    check_positive("t", t)?;
    if r == 0 {
        return Err(Error::Domain("window count r must be at least 1".into()));
    }
    if n % 2 == 1 {
        return Err(Error::Unsupported(format!("random-window recovery guarantee is stated for even n only, got n = {n}")));
    }
    if n < 2 {
        return Err(Error::Domain(format!("window length must be at least 2, got {n}")));
    }
    let bound = random_window_k_bound(n, t, r);
    let k_max = bound.floor();
    let k = k.map_or(k_max, |k| k as f64);
    Ok(GuaranteeReport::new(
        Guarantee::RandomWindow,
        "k <= (1/4) sqrt(r n / (2 ln n + ln 4 + t)) + 1/2",
        bound - k,
        1.0 - (-t).exp(),
    )
    .with("n", n as f64)
    .with("t", t)
    .with("r", r as f64)
    .with("k", k)
    .with("k_bound", bound)
    .with("k_max", k_max))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AverageCaseWindow {
    Alltop,
    Random,
}

impl AverageCaseWindow {
    pub fn from_kind(kind: &WindowKind) -> Option<Self> {
        match kind {
            WindowKind::Alltop => Some(Self::Alltop),
            WindowKind::RandomUnimodular => Some(Self::Random),
            _ => None,
        }
    }
}

/// Exponent `s` of the average-case guarantees.
///
/// The squared factor `(e^{-1/4}/2 - 2k/n)^2` only makes sense while the
/// base is positive; beyond that the sign is carried over so `s <= 0`.
pub fn average_case_s(window: AverageCaseWindow, n: usize, k: usize, sigma: f64, r: usize) -> f64 {
    let nf = n as f64;
    let kf = k as f64;
    let base = (-0.25f64).exp() / 2.0 - 2.0 * kf / nf;
    let signed_sq = base.signum() * base * base;
    let tail = kf * (kf / 2.0 + 1.0).ln();
    match window {
        AverageCaseWindow::Alltop => signed_sq * nf / (144.0 * tail),
        AverageCaseWindow::Random => signed_sq * (r as f64) * nf / (576.0 * (sigma + 2.0) * tail),
    }
}

/// Average-case guarantee for a random support of size `k >= 3` with
/// independent uniform phases.
///
/// Both the sparsity condition and `s >= 1` must hold; the margin is the
/// smaller of `k_bound - k` and `s - 1`. The probability floor is
/// `1 - (eps + (k/2)^{-s})` for the Alltop window and
/// `1 - (eps + 4 n^{-sigma} + (k/2)^{-s})` for `r` random windows (even `n`).
pub fn guarantee_average_case(
    window: AverageCaseWindow,
    n: usize,
    k: usize,
    eps: f64,
    sigma: f64,
    r: usize,
) -> Result<GuaranteeReport> {
    if k < 3 {
        return Err(Error::Domain(format!("average-case guarantee assumes k >= 3, got {k}")));
    }
    check_positive("eps", eps)?;
    if n < 2 {
        return Err(Error::Domain(format!("window length must be at least 2, got {n}")));
    }
    let nf = n as f64;
    let kf = k as f64;
    let log_term = (2.0 * nf * nf / eps).ln();
    let (theorem, statement, k_bound, floor) = match window {
        AverageCaseWindow::Alltop => (
            Guarantee::AverageCaseAlltop,
            "k <= n / (8 ln(2 n^2 / eps)) and s >= 1",
            nf / (8.0 * log_term),
            None,
        ),
        AverageCaseWindow::Random => {
            check_positive("sigma", sigma)?;
            if r == 0 {
                return Err(Error::Domain("window count r must be at least 1".into()));
            }
            if n % 2 == 1 {
                return Err(Error::Unsupported(format!(
                    "random-window average-case guarantee is stated for even n only, got n = {n}"
                )));
            }
            (
                Guarantee::AverageCaseRandom,
                "k <= r n / (32 (sigma + 2) ln n ln(2 n^2 / eps)) and s >= 1",
                (r as f64) * nf / (32.0 * (sigma + 2.0) * nf.ln() * log_term),
                Some(4.0 * nf.powf(-sigma)),
            )
        }
    };
    let s = average_case_s(window, n, k, sigma, r);
    let failure = eps + floor.unwrap_or(0.0) + (kf / 2.0).powf(-s);
    let margin = (k_bound - kf).min(s - 1.0);
    let mut rep = GuaranteeReport::new(theorem, statement, margin, 1.0 - failure)
        .with("n", nf)
        .with("k", kf)
        .with("eps", eps)
        .with("s", s)
        .with("k_bound", k_bound)
        .with("k_margin", k_bound - kf)
        .with("s_margin", s - 1.0);
    if window == AverageCaseWindow::Random {
        rep = rep.with("sigma", sigma).with("r", r as f64);
    }
    Ok(rep)
}

/// Upper bound on `P(mu >= alpha / sqrt(r n))` for `r` random unimodular
/// windows of length `n`, clipped to `[0, 1]`.
///
/// Even `n`: `4 n (n-1) e^{-alpha^2/4}`. Odd `n`:
/// `2 n (n-1) (e^{-((n-1)/n) alpha^2/4} + e^{-((n+1)/n) alpha^2/4})`.
pub fn coherence_tail_bound(n: usize, alpha: f64) -> f64 {
    clip01(coherence_tail_raw(n, alpha))
}

fn coherence_tail_raw(n: usize, alpha: f64) -> f64 {
    let nf = n as f64;
    let a = alpha * alpha / 4.0;
    let pairs = nf * (nf - 1.0);
    if n % 2 == 0 {
        4.0 * pairs * (-a).exp()
    } else {
        2.0 * pairs * ((-(nf - 1.0) / nf * a).exp() + (-(nf + 1.0) / nf * a).exp())
    }
}

/// [`coherence_tail_bound`] as a report: the verdict is whether the bound
/// is informative (below 1), and the floor bounds `P(mu < alpha / sqrt(r n))`.
pub fn guarantee_coherence_tail(n: usize, alpha: f64, r: usize) -> Result<GuaranteeReport> {
    check_positive("alpha", alpha)?;
    if n < 2 {
        return Err(Error::Domain(format!("window length must be at least 2, got {n}")));
    }
    if r == 0 {
        return Err(Error::Domain("window count r must be at least 1".into()));
    }
    if r > 1 && n % 2 == 1 {
        return Err(Error::Unsupported("the multi-window tail bound is stated for even n only".into()));
    }
    let raw = coherence_tail_raw(n, alpha);
    Ok(GuaranteeReport::new(Guarantee::CoherenceTail, "P(mu >= alpha / sqrt(r n)) <= bound < 1", 1.0 - raw, 1.0 - raw)
        .with("n", n as f64)
        .with("alpha", alpha)
        .with("r", r as f64)
        .with("bound", clip01(raw))
        .with("threshold", alpha / ((r * n) as f64).sqrt()))
}

/// Constant of the Bernoulli restricted isometry condition.
pub const BERNOULLI_C1: f64 = 23.15;

/// Right-hand side `C1 delta^{-2} (k ln(N/k) + ln(2e + 24e/delta) + t)`.
pub fn bernoulli_rows_bound(k: usize, big_n: usize, delta: f64, t: f64) -> f64 {
    let kf = k as f64;
    BERNOULLI_C1 / (delta * delta) * (kf * (big_n as f64 / kf).ln() + (2.0 * E + 24.0 * E / delta).ln() + t)
}

/// Restricted isometry of order `k` for the Bernoulli ensemble with `N`
/// atoms holds with probability `1 - e^{-t}` once the row count reaches
/// `n_min`. With `n` given, the verdict compares it with the bound;
/// otherwise `n = n_min` is evaluated.
pub fn rip_condition_bernoulli(k: usize, big_n: usize, delta: f64, t: f64, n: Option<usize>) -> Result<GuaranteeReport> {
    check_k(k)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    check_positive("t", t)?;
    if big_n < k {
        return Err(Error::Domain(format!("dictionary size N = {big_n} is smaller than k = {k}")));
    }
    let bound = bernoulli_rows_bound(k, big_n, delta, t);
    let n_min = bound.ceil();
    let n_eval = n.map_or(n_min, |n| n as f64);
    Ok(GuaranteeReport::new(
        Guarantee::BernoulliRip,
        "n >= C1 delta^-2 (k ln(N/k) + ln(2e + 24e/delta) + t)",
        n_eval - bound,
        1.0 - (-t).exp(),
    )
    .with("k", k as f64)
    .with("N", big_n as f64)
    .with("delta", delta)
    .with("t", t)
    .with("C1", BERNOULLI_C1)
    .with("n", n_eval)
    .with("n_bound", bound)
    .with("n_min", n_min))
}

/// Sparsity thresholds for Gaussian (and Bernoulli) dictionaries.
///
/// The restricted-isometry form `k <= c n / ln(N/(n eps))` has an
/// unspecified constant `c`, so only `n / ln(N/(n eps))` is reported. The
/// verdict concerns the empirical threshold `k_DT = floor(n / (2 ln(N/n)))`
/// and holds when it is positive; the margin is `n / (2 ln(N/n))`.
pub fn gaussian_sparsity_threshold(n: usize, big_n: usize, eps: f64) -> Result<GuaranteeReport> {
    check_positive("eps", eps)?;
    if big_n <= n {
        return Err(Error::Domain(format!("system is not underdetermined: N = {big_n} <= n = {n}")));
    }
    let nf = n as f64;
    let ratio = big_n as f64 / nf;
    let dt = nf / (2.0 * ratio.ln());
    let mut rep = GuaranteeReport::new(Guarantee::GaussianThreshold, "k <= n / (2 ln(N/n))", dt, 1.0 - eps)
        .with("n", nf)
        .with("N", big_n as f64)
        .with("eps", eps)
        .with("k_dt", dt.floor())
        .with("k_over_c", nf / (ratio / eps).ln());
    rep.symbolic.push("c".into());
    Ok(rep)
}

/// Stable recovery from restricted isometry constants: `delta_3k + 3 delta_4k < 2`.
pub fn rip_stability(delta3k: f64, delta4k: f64) -> Result<GuaranteeReport> {
    for (name, v) in [("delta_3k", delta3k), ("delta_4k", delta4k)] {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::Domain(format!("{name} must be non-negative, got {v}")));
        }
    }
    let mut rep = GuaranteeReport::new(Guarantee::RipStability, "delta_3k + 3 delta_4k < 2", 2.0 - delta3k - 3.0 * delta4k, 1.0)
        .with("delta_3k", delta3k)
        .with("delta_4k", delta4k);
    rep.symbolic.extend(["C1".to_string(), "C2".to_string()]);
    Ok(rep)
}
