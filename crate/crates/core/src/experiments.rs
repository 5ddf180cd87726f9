//! Monte-Carlo recovery experiments.
//!
//! A trial draws a random `k`-sparse coefficient vector, measures it with a
//! Gabor matrix (or a stack of `r` Gabor matrices), optionally adds noise,
//! and checks whether the convex program returns the truth. Trials are
//! seeded individually, so a grid of cells gives the same records whatever
//! the number of worker threads.

use std::time::Instant;

use num_complex::Complex;
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::rng::{derive_seed, mix64, seeded};
use crate::scalar::{norm2, Real};
use crate::solvers::{bpdn, BasisPursuit, SolveStatus, SolverOptions};
use crate::sparse::SparseCoefficients;
use crate::tfshift::{alltop_window, concat_gabor, dft, random_window, MeasurementMatrix, Window};

/// Componentwise tolerance for noiseless success.
pub const EXACT_TOL: f64 = 1e-10;

/// Magnitudes below this are redrawn so the support has exactly `k` entries.
const MIN_MAGNITUDE: f64 = 1e-13;

const WINDOW_SALT: u64 = 0x5749_4E44_4F57_5321;
const NOISE_SALT: u64 = 0x4E4F_4953_4521_2121;

/// Window family used to build the measurement matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowSpec {
    Alltop,
    Random,
    DftOfAlltop,
    DftOfRandom,
}

impl WindowSpec {
    pub fn is_random(self) -> bool {
        matches!(self, WindowSpec::Random | WindowSpec::DftOfRandom)
    }

    pub fn build<T: Real>(self, n: usize, seed: u64) -> Result<Window<T>> {
        match self {
            WindowSpec::Alltop => alltop_window(n),
            WindowSpec::Random => random_window(n, seed),
            WindowSpec::DftOfAlltop => alltop_window(n).map(|h| dft(&h)),
            WindowSpec::DftOfRandom => random_window(n, seed).map(|h| dft(&h)),
        }
    }

    fn code(self) -> u64 {
        match self {
            WindowSpec::Alltop => 1,
            WindowSpec::Random => 2,
            WindowSpec::DftOfAlltop => 3,
            WindowSpec::DftOfRandom => 4,
        }
    }
}

impl std::str::FromStr for WindowSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alltop" => Ok(WindowSpec::Alltop),
            "random" => Ok(WindowSpec::Random),
            "dft-of-alltop" => Ok(WindowSpec::DftOfAlltop),
            "dft-of-random" => Ok(WindowSpec::DftOfRandom),
            other => Err(Error::Domain(format!("unknown window '{other}'"))),
        }
    }
}

/// The `r` windows used for a given `(n, base_seed)`.
///
/// Window `i` is seeded from `(base_seed, i)` only, so the first `r` windows
/// are shared by every configuration with at least `r` windows.
pub fn windows_for(spec: WindowSpec, n: usize, r: usize, base_seed: u64) -> Result<Vec<Window<f64>>> {
    if r == 0 {
        return Err(Error::Domain("need at least one window".into()));
    }
    if r > 1 && !spec.is_random() {
        return Err(Error::Domain("several windows require a random window family".into()));
    }
    let family = mix64(base_seed ^ WINDOW_SALT);
    (0..r).map(|i| spec.build(n, derive_seed(family, i as u64))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuccessMode {
    /// `max_j |x'_j - x_j| <= 1e-10`.
    Componentwise,
    /// The `k` largest-modulus entries of `x'` sit on the true support.
    SupportMatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub n: usize,
    pub k: usize,
    pub window: WindowSpec,
    pub r: usize,
    pub noise_snr_db: Option<f64>,
    pub trials: usize,
    pub base_seed: u64,
    pub solver: SolverOptions<f64>,
    pub success_mode: SuccessMode,
}

impl TrialConfig {
    /// Noiseless single-window configuration with componentwise success.
    pub fn new(n: usize, k: usize, window: WindowSpec, trials: usize, base_seed: u64) -> Self {
        Self {
            n,
            k,
            window,
            r: 1,
            noise_snr_db: None,
            trials,
            base_seed,
            solver: SolverOptions::default(),
            success_mode: SuccessMode::Componentwise,
        }
    }

    /// Switches to noisy measurements at the given SNR, judged by support match.
    pub fn with_noise(mut self, snr_db: f64) -> Self {
        self.noise_snr_db = Some(snr_db);
        self.success_mode = SuccessMode::SupportMatch;
        self
    }

    pub fn with_windows(mut self, r: usize) -> Self {
        self.r = r;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Domain("n must be positive".into()));
        }
        if self.k == 0 || self.k > self.n * self.n {
            return Err(Error::Domain(format!("k = {} outside 1..={}", self.k, self.n * self.n)));
        }
        if self.trials == 0 {
            return Err(Error::Domain("trials must be positive".into()));
        }
        if self.r == 0 {
            return Err(Error::Domain("r must be positive".into()));
        }
        Ok(())
    }

    /// Stable 64-bit fingerprint of the fields that determine the outcomes.
    pub fn hash(&self) -> u64 {
        let snr = self.noise_snr_db.map_or(u64::MAX, f64::to_bits);
        let mode = match self.success_mode {
            SuccessMode::Componentwise => 1,
            SuccessMode::SupportMatch => 2,
        };
        let s = &self.solver;
        [
            self.n as u64,
            self.k as u64,
            self.window.code(),
            self.r as u64,
            snr,
            self.base_seed,
            mode,
            s.max_iter as u64,
            s.abs_tol.to_bits(),
            s.rel_tol.to_bits(),
            s.relaxation.to_bits(),
            s.rho.to_bits(),
            s.feas_tol.to_bits(),
            s.gap_tol.to_bits(),
            s.support_tol.to_bits(),
            s.polish_every as u64,
        ]
        .iter()
        .fold(0xCBF2_9CE4_8422_2325, |h, &v| mix64(h ^ v))
    }

    /// Seed of trial `trial_index`; independent of `n` and `k`.
    pub fn trial_seed(&self, trial_index: usize) -> u64 {
        derive_seed(self.base_seed, trial_index as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub config_hash: u64,
    pub trial_index: usize,
    pub seed: u64,
    pub success: bool,
    pub max_component_error: f64,
    /// `||x' - x||_2`.
    pub error_norm: f64,
    /// `||eta||_2` of the injected noise (zero when noiseless).
    pub noise_norm: f64,
    pub recovered_support: Vec<usize>,
    pub true_support: Vec<usize>,
    pub status: SolveStatus,
    pub wall_time: f64,
}

/// Random `k`-sparse vector of length `len` with entries `r e^{2 pi i theta}`,
/// `r ~ N(0, 1)`, `theta ~ U[0, 1)`, on a uniformly random support.
pub fn gen_sparse_x<T: Real>(len: usize, k: usize, seed: u64) -> Result<SparseCoefficients<T>> {
    if k > len {
        return Err(Error::Dimension(format!("sparsity {k} exceeds length {len}")));
    }
    let mut rng = seeded(seed);
    let mut support = sample(&mut rng, len, k).into_vec();
    support.sort_unstable();
    let mut x = SparseCoefficients::new(len);
    for j in support {
        let r = loop {
            let r: f64 = rng.sample(StandardNormal);
            if r.abs() >= MIN_MAGNITUDE {
                break r;
            }
        };
        let theta: f64 = rng.random();
        x.insert(j, Complex::from_polar(T::lit(r), T::TAU() * T::lit(theta)))?;
    }
    Ok(x)
}

/// `b + eta` with i.i.d. real standard normal `eta` rescaled to
/// `||eta|| = ||b|| 10^{-snr_db / 20}`.
pub fn add_noise<T: Real>(b: &[Complex<T>], snr_db: f64, seed: u64) -> Result<Vec<Complex<T>>> {
    let bn = norm2(b);
    if bn == T::zero() {
        return Err(Error::Degenerate("cannot set an SNR relative to a zero signal".into()));
    }
    let mut rng = seeded(seed);
    let raw: Vec<f64> = (0..b.len()).map(|_| rng.sample(StandardNormal)).collect();
    let rn = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
    let target = bn.as_f64() * 10f64.powf(-snr_db / 20.0);
    let s = if rn > 0.0 { target / rn } else { 0.0 };
    Ok(b.iter().zip(raw).map(|(z, e)| z + Complex::new(T::lit(e * s), T::zero())).collect())
}

/// Indices of the `k` largest-modulus entries, ties broken by lower index, sorted.
pub fn top_k_support<T: Real>(x: &[Complex<T>], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[b].norm().partial_cmp(&x[a].norm()).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
    idx.truncate(k);
    idx.sort_unstable();
    idx
}

/// The sparse vector and measurements drawn for one trial.
#[derive(Debug, Clone)]
pub struct TrialInstance {
    pub x: SparseCoefficients<f64>,
    pub clean: Vec<Complex<f64>>,
    /// `clean` plus noise when an SNR is configured.
    pub measured: Vec<Complex<f64>>,
    pub noise_norm: f64,
}

/// Measurement matrix and prepared solver shared by all trials of a configuration.
pub struct TrialContext {
    cfg: TrialConfig,
    hash: u64,
    matrix: MeasurementMatrix<f64>,
}

impl TrialContext {
    pub fn new(cfg: &TrialConfig) -> Result<Self> {
        cfg.validate()?;
        let windows = windows_for(cfg.window, cfg.n, cfg.r, cfg.base_seed)?;
        let matrix = concat_gabor(&windows)?;
        Ok(Self { cfg: cfg.clone(), hash: cfg.hash(), matrix })
    }

    pub fn config(&self) -> &TrialConfig {
        &self.cfg
    }

    pub fn matrix(&self) -> &CMat<f64> {
        self.matrix.matrix()
    }

    /// Runs trials `0..cfg.trials` in parallel, returned in trial order.
    pub fn run_all(&self) -> Vec<TrialRecord> {
        let bp = BasisPursuit::new(self.matrix());
        (0..self.cfg.trials).into_par_iter().map(|i| self.run_with(&bp, i)).collect()
    }

    pub fn run(&self, trial_index: usize) -> TrialRecord {
        self.run_with(&BasisPursuit::new(self.matrix()), trial_index)
    }

    /// Ground truth and observations of trial `trial_index`.
    pub fn instance(&self, trial_index: usize) -> Result<TrialInstance> {
        let a = self.matrix();
        let seed = self.cfg.trial_seed(trial_index);
        let x = gen_sparse_x::<f64>(a.cols(), self.cfg.k, seed)?;
        let clean = a.mul_vec(&x.to_dense());
        let (measured, noise_norm) = match self.cfg.noise_snr_db {
            None => (clean.clone(), 0.0),
            Some(snr) => {
                let b = add_noise(&clean, snr, mix64(seed ^ NOISE_SALT))?;
                let eta: Vec<_> = b.iter().zip(&clean).map(|(u, v)| u - v).collect();
                (b, norm2(&eta))
            }
        };
        Ok(TrialInstance { x, clean, measured, noise_norm })
    }

    fn run_with(&self, bp: &BasisPursuit<'_, f64>, trial_index: usize) -> TrialRecord {
        let start = Instant::now();
        let cfg = &self.cfg;
        let a = self.matrix();
        let seed = cfg.trial_seed(trial_index);
        let mut record = TrialRecord {
            config_hash: self.hash,
            trial_index,
            seed,
            success: false,
            max_component_error: f64::INFINITY,
            error_norm: f64::INFINITY,
            noise_norm: 0.0,
            recovered_support: Vec::new(),
            true_support: Vec::new(),
            status: SolveStatus::MaxIter,
            wall_time: 0.0,
        };
        let inst = match self.instance(trial_index) {
            Ok(inst) => inst,
            Err(_) => return record,
        };
        let x = inst.x;
        record.true_support = x.support();
        record.noise_norm = inst.noise_norm;
        let solved = match cfg.noise_snr_db {
            None => bp.solve(&inst.measured, &cfg.solver),
            Some(_) => bpdn(a, &inst.measured, inst.noise_norm, &cfg.solver),
        };
        if let Ok(rep) = solved {
            let xr = rep.solution.to_dense();
            let xt = x.to_dense();
            let diff: Vec<_> = xr.iter().zip(&xt).map(|(u, v)| u - v).collect();
            record.max_component_error = diff.iter().map(|d| d.norm()).fold(0.0, f64::max);
            record.error_norm = norm2(&diff);
            record.status = rep.status;
            record.recovered_support = match cfg.success_mode {
                SuccessMode::Componentwise => rep.solution.support(),
                SuccessMode::SupportMatch => top_k_support(&xr, cfg.k),
            };
            record.success = rep.status == SolveStatus::Optimal
                && match cfg.success_mode {
                    SuccessMode::Componentwise => record.max_component_error <= EXACT_TOL,
                    SuccessMode::SupportMatch => record.recovered_support == record.true_support,
                };
        } else {
            record.status = SolveStatus::Infeasible;
        }
        record.wall_time = start.elapsed().as_secs_f64();
        record
    }
}

/// One identification round of `cfg`.
pub fn run_trial(cfg: &TrialConfig, trial_index: usize) -> Result<TrialRecord> {
    Ok(TrialContext::new(cfg)?.run(trial_index))
}

/// Success count of one `(r, n, k)` cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cell {
    pub r: usize,
    pub n: usize,
    pub k: usize,
    pub trials: usize,
    pub successes: usize,
}

impl Cell {
    pub fn fraction(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }
}

/// Runs every `(n, k)` cell of the grid with the template's window, noise,
/// trial count and seed. Cells come back ordered by `n`, then `k`.
pub fn phase_grid(n_values: &[usize], k_values: &[usize], template: &TrialConfig) -> Result<Vec<Cell>> {
    let mut out = Vec::new();
    for &n in n_values {
        out.extend(cells_for(n, template.r, k_values, template)?);
    }
    Ok(out)
}

/// Runs the grid over `r` stacked random windows at fixed `n`, ordered by `r`, then `k`.
pub fn multi_window_grid(n: usize, r_values: &[usize], k_values: &[usize], template: &TrialConfig) -> Result<Vec<Cell>> {
    let mut out = Vec::new();
    for &r in r_values {
        out.extend(cells_for(n, r, k_values, template)?);
    }
    Ok(out)
}

fn cells_for(n: usize, r: usize, k_values: &[usize], template: &TrialConfig) -> Result<Vec<Cell>> {
    let base = TrialConfig { n, r, k: 1, ..template.clone() };
    base.validate()?;
    let windows = windows_for(base.window, n, r, base.base_seed)?;
    let matrix = concat_gabor(&windows)?;
    let contexts: Vec<TrialContext> = k_values
        .iter()
        .map(|&k| {
            let cfg = TrialConfig { k, ..base.clone() };
            cfg.validate()?;
            Ok(TrialContext { hash: cfg.hash(), cfg, matrix: matrix.clone() })
        })
        .collect::<Result<_>>()?;
    let bp = BasisPursuit::new(matrix.matrix());
    let jobs: Vec<(usize, usize)> = (0..contexts.len()).flat_map(|c| (0..base.trials).map(move |t| (c, t))).collect();
    let hits: Vec<bool> = jobs.par_iter().map(|&(c, t)| contexts[c].run_with(&bp, t).success).collect();
    Ok(contexts
        .iter()
        .enumerate()
        .map(|(c, ctx)| Cell {
            r,
            n,
            k: ctx.cfg.k,
            trials: base.trials,
            successes: hits[c * base.trials..(c + 1) * base.trials].iter().filter(|&&h| h).count(),
        })
        .collect())
}

/// Maximum-likelihood fit of `P(success | k) = 1 / (1 + e^{-(beta0 + beta1 k)})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogisticFit {
    pub beta0: f64,
    pub beta1: f64,
    pub log_likelihood: f64,
    pub converged: bool,
    pub separation_flag: bool,
}

impl LogisticFit {
    pub fn probability(&self, k: f64) -> f64 {
        1.0 / (1.0 + (-(self.beta0 + self.beta1 * k)).exp())
    }
}

/// Ridge weight applied when the data are separable.
pub const SEPARATION_RIDGE: f64 = 1e-4;

// ln(1 + e^x) without overflow
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// True when some threshold on `k` splits successes from failures, in which
/// case the likelihood has no finite maximizer.
fn separable(counts: &[(f64, usize, usize)]) -> bool {
    let succ = counts.iter().filter(|c| c.1 > 0).map(|c| c.0);
    let fail = counts.iter().filter(|c| c.1 < c.2).map(|c| c.0);
    let (smin, smax) = succ.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), k| (a.min(k), b.max(k)));
    let (fmin, fmax) = fail.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), k| (a.min(k), b.max(k)));
    fmax <= smin || smax <= fmin
}

/// Binomial logistic regression by damped Newton iteration.
///
/// `counts` holds `(k, successes, trials)`. Separable data get the ridge
/// `SEPARATION_RIDGE * (beta0^2 + beta1^2)`.
pub fn fit_logistic(counts: &[(f64, usize, usize)]) -> Result<LogisticFit> {
    if let Some(c) = counts.iter().find(|c| c.2 == 0 || c.1 > c.2) {
        return Err(Error::Domain(format!("invalid count ({}, {}, {})", c.0, c.1, c.2)));
    }
    let mut ks: Vec<f64> = counts.iter().map(|c| c.0).collect();
    ks.sort_by(f64::total_cmp);
    ks.dedup();
    if ks.len() < 2 {
        return Err(Error::Domain("need at least two distinct k".into()));
    }
    let separation_flag = separable(counts);
    let ridge = if separation_flag { SEPARATION_RIDGE } else { 0.0 };

    let loglik = |b0: f64, b1: f64| -> f64 {
        counts
            .iter()
            .map(|&(k, s, t)| {
                let eta = b0 + b1 * k;
                -(s as f64) * softplus(-eta) - ((t - s) as f64) * softplus(eta)
            })
            .sum()
    };
    let objective = |b0: f64, b1: f64| loglik(b0, b1) - ridge * (b0 * b0 + b1 * b1);

    let (s_tot, t_tot) = counts.iter().fold((0usize, 0usize), |acc, c| (acc.0 + c.1, acc.1 + c.2));
    let pooled = ((s_tot as f64 + 0.5) / (t_tot as f64 + 1.0)).clamp(1e-6, 1.0 - 1e-6);
    let (mut b0, mut b1) = ((pooled / (1.0 - pooled)).ln(), 0.0);
    let mut f = objective(b0, b1);
    let mut converged = false;
    for _ in 0..200 {
        let (mut g0, mut g1, mut h00, mut h01, mut h11) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &(k, s, t) in counts {
            let p = sigmoid(b0 + b1 * k);
            let r = s as f64 - t as f64 * p;
            let w = t as f64 * p * (1.0 - p);
            g0 += r;
            g1 += r * k;
            h00 += w;
            h01 += w * k;
            h11 += w * k * k;
        }
        g0 -= 2.0 * ridge * b0;
        g1 -= 2.0 * ridge * b1;
        h00 += 2.0 * ridge;
        h11 += 2.0 * ridge;
        if g0.abs().max(g1.abs()) <= 1e-8 {
            converged = true;
            break;
        }
        let det = h00 * h11 - h01 * h01;
        if !(det > 0.0) {
            break;
        }
        let d0 = (h11 * g0 - h01 * g1) / det;
        let d1 = (h00 * g1 - h01 * g0) / det;
        let mut step = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let (n0, n1) = (b0 + step * d0, b1 + step * d1);
            let fn_ = objective(n0, n1);
            if fn_ >= f {
                b0 = n0;
                b1 = n1;
                f = fn_;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    Ok(LogisticFit { beta0: b0, beta1: b1, log_likelihood: loglik(b0, b1), converged, separation_flag })
}

/// Logistic fit of a run of cells against `k`.
pub fn fit_cells(cells: &[Cell]) -> Result<LogisticFit> {
    let counts: Vec<_> = cells.iter().map(|c| (c.k as f64, c.successes, c.trials)).collect();
    fit_logistic(&counts)
}

/// The `k` at which the fitted success probability equals `level`.
pub fn level_curve(fit: &LogisticFit, level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Domain(format!("level {level} outside (0, 1)")));
    }
    if fit.beta1 == 0.0 {
        return Err(Error::Undefined("flat logistic fit has no level curve".into()));
    }
    Ok(((level / (1.0 - level)).ln() - fit.beta0) / fit.beta1)
}

/// Sparsity fraction `k/n = 1 / (2 ln n)` below which recovery holds with
/// overwhelming probability.
pub fn reference_threshold(n: f64) -> f64 {
    1.0 / (2.0 * n.ln())
}

/// First `k` where the observed success fraction falls below one half,
/// linearly interpolated from the previous cell. Cells must be sorted by `k`.
/// `None` if no cell falls below one half.
pub fn empirical_crossover(cells: &[Cell]) -> Option<f64> {
    let pos = cells.iter().position(|c| c.fraction() < 0.5)?;
    if pos == 0 {
        return Some(cells[0].k as f64);
    }
    let (lo, hi) = (&cells[pos - 1], &cells[pos]);
    let (f0, f1) = (lo.fraction(), hi.fraction());
    Some(lo.k as f64 + (f0 - 0.5) / (f0 - f1) * (hi.k - lo.k) as f64)
}
