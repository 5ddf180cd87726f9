use rand_distr::{Binomial, Distribution};
use sparse_ident::analysis::{gabor_coherence, guarantee_alltop};
use sparse_ident::experiments::*;
use sparse_ident::rng::seeded;
use sparse_ident::solvers::{l0_oracle, SolveStatus};
use sparse_ident::tfshift::alltop_window;

fn kuiper_p_value(mut u: Vec<f64>) -> f64 {
    u.sort_by(f64::total_cmp);
    let n = u.len() as f64;
    let (mut dp, mut dm) = (0.0f64, 0.0f64);
    for (i, x) in u.iter().enumerate() {
        dp = dp.max((i + 1) as f64 / n - x);
        dm = dm.max(x - i as f64 / n);
    }
    let lambda = (n.sqrt() + 0.155 + 0.24 / n.sqrt()) * (dp + dm);
    (1..100)
        .map(|j| {
            let t = (j * j) as f64 * lambda * lambda;
            2.0 * (4.0 * t - 1.0) * (-2.0 * t).exp()
        })
        .sum()
}

#[test]
fn sparse_draws_include_every_index_uniformly() {
    // each index lies in the support with the hypergeometric marginal k / N
    let (len, k, draws) = (20usize, 5usize, 10_000u64);
    let mut counts = vec![0usize; len];
    for seed in 0..draws {
        let x = gen_sparse_x::<f64>(len, k, seed).unwrap();
        assert_eq!(x.sparsity(), k);
        for j in x.support() {
            counts[j] += 1;
        }
    }
    let p = k as f64 / len as f64;
    let sigma = (p * (1.0 - p) / draws as f64).sqrt();
    for (j, &c) in counts.iter().enumerate() {
        let f = c as f64 / draws as f64;
        assert!((f - p).abs() <= 3.0 * sigma, "index {j}: {f}");
    }
}

#[test]
fn sparse_draw_phases_are_uniform() {
    let mut theta = Vec::new();
    let mut seed = 0;
    while theta.len() < 10_000 {
        let x = gen_sparse_x::<f64>(100, 10, 50_000 + seed).unwrap();
        theta.extend(x.values().iter().map(|z| z.arg().rem_euclid(std::f64::consts::TAU) / std::f64::consts::TAU));
        seed += 1;
    }
    let p = kuiper_p_value(theta);
    assert!(p > 0.01, "Kuiper p = {p}");
}

#[test]
fn noise_levels() {
    let b: Vec<_> = (0..30).map(|q| num_complex::Complex::new((q as f64).sin(), (q as f64).cos())).collect();
    let bn = sparse_ident::scalar::norm2(&b);
    for (snr, ratio) in [(25.0, 10f64.powf(-1.25)), (0.0, 1.0), (300.0, 1e-15)] {
        let y = add_noise(&b, snr, 4).unwrap();
        let eta: Vec<_> = y.iter().zip(&b).map(|(u, v)| u - v).collect();
        assert!((sparse_ident::scalar::norm2(&eta) / bn - ratio).abs() <= 1e-12 * ratio.max(1e-3));
    }
    assert!((10f64.powf(-1.25) - 0.05623).abs() < 1e-5);
}

#[test]
fn trial_examples() {
    let rec = run_trial(&TrialConfig::new(11, 1, WindowSpec::Alltop, 1, 3), 0).unwrap();
    assert!(rec.success);
    assert_eq!(rec.status, SolveStatus::Optimal);
    assert_eq!(rec.recovered_support, rec.true_support);

    let dense = run_trial(&TrialConfig::new(5, 25, WindowSpec::Alltop, 1, 3), 0).unwrap();
    assert!(!dense.success);
    assert_eq!(dense.true_support.len(), 25);
}

#[test]
fn random_window_two_sparse_with_oracle_check() {
    let cfg = TrialConfig::new(30, 2, WindowSpec::Random, 100, 17);
    let ctx = TrialContext::new(&cfg).unwrap();
    let records = ctx.run_all();
    let ok = records.iter().filter(|r| r.success).count();
    assert!(ok >= 99, "{ok} of 100");
    // the exhaustive oracle confirms that the true support is the unique sparsest fit
    for rec in records.iter().take(5) {
        let x = gen_sparse_x::<f64>(900, 2, rec.seed).unwrap();
        let b = ctx.matrix().mul_vec(&x.to_dense());
        let l0 = l0_oracle(ctx.matrix(), &b, 2, 1e-9).unwrap();
        assert_eq!(l0.all_supports, vec![rec.true_support.clone()]);
    }
}

/// Largest deviation of `f` from its best non-increasing fit (pool adjacent violators).
fn isotonic_deviation(f: &[f64]) -> f64 {
    let mut blocks: Vec<(f64, usize)> = Vec::new();
    for &v in f {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (b, nb) = blocks[blocks.len() - 1];
            let (a, na) = blocks[blocks.len() - 2];
            if a >= b {
                break;
            }
            blocks.truncate(blocks.len() - 2);
            blocks.push(((a * na as f64 + b * nb as f64) / (na + nb) as f64, na + nb));
        }
    }
    let fit: Vec<f64> = blocks.iter().flat_map(|&(v, c)| std::iter::repeat_n(v, c)).collect();
    f.iter().zip(&fit).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

#[test]
fn phase_grid_is_monotone_in_k() {
    let template = TrialConfig::new(11, 1, WindowSpec::Alltop, 100, 5);
    let ks: Vec<usize> = (1..=10).collect();
    let cells = phase_grid(&[11, 13], &ks, &template).unwrap();
    assert_eq!(cells.len(), 20);
    for n in [11, 13] {
        let row: Vec<f64> = cells.iter().filter(|c| c.n == n).map(|c| c.fraction()).collect();
        assert_eq!(row[0], 1.0);
        assert!(isotonic_deviation(&row) < 0.1, "n = {n}: {row:?}");
    }
    assert_eq!(phase_grid(&[11], &[1, 2, 3], &template).unwrap(), cells[..3].to_vec());
}

#[test]
fn far_above_transition_fails() {
    let template = TrialConfig::new(43, 40, WindowSpec::Alltop, 40, 9);
    let cells = phase_grid(&[43], &[40], &template).unwrap();
    assert!(cells[0].fraction() <= 0.05, "{:?}", cells[0]);
}

#[test]
fn logistic_fit_recovers_generating_model() {
    let (b0, b1) = (10.0, -1.0);
    let mut rng = seeded(2024);
    let counts: Vec<(f64, usize, usize)> = (1..=20)
        .map(|k| {
            let p = 1.0 / (1.0 + (-(b0 + b1 * k as f64)).exp());
            let s = Binomial::new(10_000, p).unwrap().sample(&mut rng) as usize;
            (k as f64, s, 10_000)
        })
        .collect();
    let fit = fit_logistic(&counts).unwrap();
    assert!(fit.converged && !fit.separation_flag);
    assert!((fit.beta0 - b0).abs() <= 0.05 * b0.abs(), "{fit:?}");
    assert!((fit.beta1 - b1).abs() <= 0.05 * b1.abs(), "{fit:?}");
    assert!((fit.probability(-fit.beta0 / fit.beta1) - 0.5).abs() < 1e-12);

    let all = fit_logistic(&[(1.0, 10, 10), (2.0, 10, 10), (3.0, 10, 10)]).unwrap();
    assert!(all.separation_flag && all.beta0.is_finite());
    let split = fit_logistic(&[(1.0, 10, 10), (2.0, 10, 10), (3.0, 0, 10)]).unwrap();
    assert!(split.separation_flag && split.beta1 < 0.0);
    assert!(fit_logistic(&[(1.0, 3, 10)]).is_err());
}

#[test]
fn level_curves_and_reference() {
    let fit = LogisticFit { beta0: 10.0, beta1: -1.0, log_likelihood: 0.0, converged: true, separation_flag: false };
    assert!((level_curve(&fit, 0.5).unwrap() - 10.0).abs() < 1e-12);
    let k93 = level_curve(&fit, 0.93).unwrap();
    assert!((k93 - ((0.93f64 / 0.07).ln() - 10.0) / -1.0).abs() < 1e-12);
    assert!(k93 < 10.0);
    assert!(level_curve(&fit, 1.0).is_err());
    let flat = LogisticFit { beta1: 0.0, ..fit };
    assert!(level_curve(&flat, 0.5).is_err());

    assert!((reference_threshold(43.0) - 0.1329).abs() < 1e-4);
    assert!((reference_threshold(std::f64::consts::E) - 0.5).abs() < 1e-15);
    assert!(reference_threshold(11.0) > reference_threshold(59.0));
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let cfg = TrialConfig::new(13, 4, WindowSpec::Random, 24, 77).with_noise(25.0);
    let strip = |mut v: Vec<TrialRecord>| {
        v.iter_mut().for_each(|r| r.wall_time = 0.0);
        v
    };
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| strip(TrialContext::new(&cfg).unwrap().run_all()))
    };
    let one = run(1);
    assert_eq!(one, run(3));
    assert_eq!(one, strip((0..24).map(|i| run_trial(&cfg, i).unwrap()).collect()));
    assert!(one.iter().all(|r| r.config_hash == cfg.hash()));
}

#[test]
fn guarantee_region_is_perfect() {
    for n in [11usize, 13, 17, 19, 23] {
        let k_max = guarantee_alltop(n, None).unwrap().parameter("k_max").unwrap() as usize;
        for k in 1..=k_max {
            let cfg = TrialConfig::new(n, k, WindowSpec::Alltop, 50, 31);
            for rec in TrialContext::new(&cfg).unwrap().run_all() {
                assert!(rec.success, "n = {n}, k = {k}, trial {}", rec.trial_index);
                assert_eq!(rec.recovered_support, rec.true_support);
            }
        }
    }
}

#[test]
fn noisy_trials_respect_error_bound() {
    // k = 1 at n = 23: (4k - 1) mu = 3 / sqrt(23) < 1
    let n = 23;
    let mu = gabor_coherence(&alltop_window::<f64>(n).unwrap()).mu;
    assert!(3.0 * mu < 1.0);
    let cfg = TrialConfig::new(n, 1, WindowSpec::Alltop, 60, 12).with_noise(25.0);
    for rec in TrialContext::new(&cfg).unwrap().run_all() {
        assert_eq!(rec.status, SolveStatus::Optimal);
        let bound = (2.0 * rec.noise_norm).powi(2) / (1.0 - 3.0 * mu);
        assert!(rec.error_norm.powi(2) <= bound, "trial {}: {} > {bound}", rec.trial_index, rec.error_norm.powi(2));
    }
}

#[test]
fn single_window_column_reproduces_phase_grid() {
    let template = TrialConfig::new(12, 1, WindowSpec::Random, 30, 8);
    let ks = [2, 4, 6];
    let multi = multi_window_grid(12, &[1], &ks, &template).unwrap();
    let single = phase_grid(&[12], &ks, &template).unwrap();
    assert_eq!(multi, single);
    assert!(multi_window_grid(12, &[2], &ks, &TrialConfig::new(12, 1, WindowSpec::Alltop, 5, 8)).is_err());
}

#[test]
fn more_windows_do_not_hurt() {
    let template = TrialConfig::new(16, 1, WindowSpec::Random, 100, 21);
    let ks = [3, 5, 7];
    let cells = multi_window_grid(16, &[1, 2], &ks, &template).unwrap();
    for &k in &ks {
        let f: Vec<f64> = cells.iter().filter(|c| c.k == k).map(|c| c.fraction()).collect();
        let p = (f[0] + f[1]) / 2.0;
        let sigma = (2.0 * p * (1.0 - p) / 100.0).sqrt();
        assert!(f[1] >= f[0] - 3.0 * sigma, "k = {k}: {f:?}");
    }
}
