use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;
use sparse_ident::analysis::{coherence, restricted_isometry_constant};
use sparse_ident::ensembles::*;
use sparse_ident::rng::seeded;
use sparse_ident::scalar::{inner, norm2, unit_root};
use sparse_ident::solvers::{basis_pursuit, l0_oracle, SolverOptions};
use sparse_ident::{Mat64, C64};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

fn unit_e1(m: usize) -> Vec<C64> {
    let mut h = vec![c(0., 0.); m];
    h[0] = c(1., 0.);
    h
}

/// Raw entries `(Psi_j h)_q`, recovered from the normalized columns and their scales.
fn raw_entries(d: &Dictionary, h: &[C64]) -> Vec<C64> {
    let a = measurement_from_dictionary(d, h).unwrap();
    let scales = a.scales().unwrap().to_vec();
    let mut out = Vec::new();
    for (j, s) in scales.iter().enumerate() {
        out.extend(a.matrix().col(j).iter().map(|z| z * s));
    }
    out
}

type Dictionary = MatrixDictionary<f64>;

fn random_unit(m: usize, seed: u64) -> Vec<C64> {
    let mut rng = seeded(seed);
    let v: Vec<C64> = (0..m).map(|_| c(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
    let s = norm2(&v);
    v.into_iter().map(|z| z / s).collect()
}

#[test]
fn identity_dictionary_columns() {
    // Psi_j = e_j e_1^T maps h to h_1 e_j: the measurement matrix is the identity
    let atoms: Vec<Mat64> = (0..4)
        .map(|j| {
            let mut a = Mat64::zeros(4, 3);
            a[(j, 0)] = c(1., 0.);
            a
        })
        .collect();
    let d = MatrixDictionary::custom(atoms).unwrap();
    let a = measurement_from_dictionary(&d, &[c(2., 0.), c(5., 0.), c(-1., 0.)]).unwrap();
    for i in 0..4 {
        for j in 0..4 {
            let e = if i == j { 1.0 } else { 0.0 };
            assert!((a.matrix()[(i, j)] - c(e, 0.)).norm() < 1e-15);
        }
    }
    assert_eq!(a.scales().unwrap(), &[2.0; 4]);
    assert!(measurement_from_dictionary(&d, &[c(0., 0.); 3]).is_err());
    assert!(measurement_from_dictionary(&d, &[c(1., 0.); 2]).is_err());
}

#[test]
fn gaussian_entries_are_standard_normal() {
    let h = random_unit(5, 11);
    let d = gaussian_dictionary::<f64>(100, 5, 20, 1).unwrap();
    let raw = raw_entries(&d, &h);
    assert_eq!(raw.len(), 2000);
    // real dictionary entries and complex h: re and im parts are independent N(0, |h_re|^2), N(0, |h_im|^2)
    let h_real = vec![c(1. / 5f64.sqrt(), 0.); 5];
    let d = gaussian_dictionary::<f64>(100, 5, 100, 2).unwrap();
    let mut samples: Vec<f64> = raw_entries(&d, &h_real).iter().map(|z| z.re).collect();
    assert_eq!(samples.len(), 10_000);
    assert!(raw_entries(&d, &h_real).iter().all(|z| z.im == 0.0));

    let len = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / len;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (len - 1.0);
    assert!((var - 1.0).abs() < 0.05, "variance {var}");

    // Kolmogorov-Smirnov against N(0, 1) at the 1% level
    samples.sort_by(f64::total_cmp);
    let normal = Normal::standard();
    let mut ks = 0.0f64;
    for (i, x) in samples.iter().enumerate() {
        let f = normal.cdf(*x);
        ks = ks.max((f - i as f64 / len).abs()).max(((i + 1) as f64 / len - f).abs());
    }
    let lambda = (len.sqrt() + 0.12 + 0.11 / len.sqrt()) * ks;
    let p: f64 = 2.0 * (1..100).map(|j| (-1f64).powi(j - 1) * (-2.0 * (j * j) as f64 * lambda * lambda).exp()).sum::<f64>();
    assert!(p > 0.01, "KS statistic {ks}, p = {p}");
}

#[test]
fn gaussian_dictionary_mean_is_zero() {
    let d = gaussian_dictionary::<f64>(100, 10, 100, 3).unwrap();
    let total: f64 = d.atoms().iter().flat_map(|a| a.columns().flat_map(|c| c.iter().map(|z| z.re)).collect::<Vec<_>>()).sum();
    let mean = total / 100_000.0;
    assert!(mean.abs() < 0.02, "mean {mean}");
    assert_eq!(d.shape(), (100, 10));
    assert_eq!(d.kind(), DictionaryKind::Gaussian);
    assert_eq!(d.seed(), Some(3));
    assert!(gaussian_dictionary::<f64>(0, 1, 1, 0).is_err());
}

#[test]
fn gaussian_one_sparse_recovery() {
    let (n, m, big_n) = (20, 4, 40);
    let h = random_unit(m, 5);
    for trial in 0..50u64 {
        let d = gaussian_dictionary::<f64>(n, m, big_n, 100 + trial).unwrap();
        let a = measurement_from_dictionary(&d, &h).unwrap();
        let mut rng = seeded(trial);
        let j = rng.random_range(0..big_n);
        let v = unit_root::<f64>(rng.random_range(0..12), 12) * rng.random_range(0.5..2.0);
        let b: Vec<C64> = a.matrix().col(j).iter().map(|z| z * v).collect();

        let l0 = l0_oracle(a.matrix(), &b, 1, 1e-10).unwrap();
        assert_eq!(l0.sparsity, 1);
        assert_eq!(l0.all_supports, vec![vec![j]]);

        let rep = basis_pursuit(a.matrix(), &b, &SolverOptions::default()).unwrap();
        assert!(rep.is_optimal());
        let x = rep.solution.to_dense();
        for (i, z) in x.iter().enumerate() {
            let e = if i == j { v } else { c(0., 0.) };
            assert!((z - e).norm() < 1e-10, "trial {trial}, index {i}");
        }
    }
}

#[test]
fn bernoulli_entries_have_unit_modulus() {
    let d = bernoulli_dictionary::<f64>(16, 4, 30, 9).unwrap();
    assert!(d.atoms().iter().all(|a| a.columns().all(|c| c.iter().all(|z| z.norm() == 1.0 && z.im == 0.0))));
    let a = measurement_from_dictionary(&d, &unit_e1(4)).unwrap();
    assert!(a.scales().unwrap().iter().all(|s| (s - 4.0).abs() < 1e-14));
    assert!(a.matrix().columns().all(|c| c.iter().all(|z| (z.norm() - 0.25).abs() < 1e-15)));
    assert_eq!(d.kind(), DictionaryKind::Bernoulli);
}

#[test]
fn bernoulli_two_sparse_isometry() {
    // for unit-norm columns, the 2x2 Gram matrices have eigenvalues 1 +- |<a_i, a_j>|,
    // so delta_2 equals the coherence
    let (n, m, big_n) = (40, 4, 20);
    let h = vec![c(1.0 / (m as f64).sqrt(), 0.); m];
    let mut below = 0;
    for seed in 0..100 {
        let d = bernoulli_dictionary::<f64>(n, m, big_n, seed).unwrap();
        let a = measurement_from_dictionary(&d, &h).unwrap();
        let delta2 = restricted_isometry_constant(&a, 2).unwrap();
        let mut pair = 0.0f64;
        for i in 0..big_n {
            for j in i + 1..big_n {
                pair = pair.max(inner(a.matrix().col(i), a.matrix().col(j)).norm());
            }
        }
        assert!((delta2 - pair).abs() < 1e-10, "seed {seed}: {delta2} vs {pair}");
        if delta2 < 1.0 {
            below += 1;
        }
    }
    assert!(below >= 95, "{below} of 100");
}

#[test]
fn bernoulli_norm_concentration() {
    // A has entries +-1/sqrt(n); P(| ||Av||^2 - ||v||^2 | >= eps ||v||^2) <= 2 exp(-(n/2)(eps^2/2 - eps^3/3))
    let (n, big_n, eps, seeds) = (64usize, 32usize, 0.5f64, 2000usize);
    let floor = 1.0 - 2.0 * (-(n as f64 / 2.0) * (eps * eps / 2.0 - eps.powi(3) / 3.0)).exp();
    let v = random_unit(big_n, 77);
    let mut ok = 0;
    for seed in 0..seeds as u64 {
        let d = bernoulli_dictionary::<f64>(n, 2, big_n, 1000 + seed).unwrap();
        let a = measurement_from_dictionary(&d, &unit_e1(2)).unwrap();
        let av = a.matrix().mul_vec(&v);
        if (norm2(&av).powi(2) - 1.0).abs() < eps {
            ok += 1;
        }
    }
    let frac = ok as f64 / seeds as f64;
    let sigma = (floor * (1.0 - floor) / seeds as f64).sqrt();
    assert!(frac >= floor - 3.0 * sigma, "{frac} < {floor}");
}

#[test]
fn restricted_modulations_match_partial_fourier() {
    let n = 12;
    let omega = SampleSet::new(n, vec![0, 3, 4, 9]).unwrap();
    let d = restricted_modulation_dictionary::<f64>(n, &omega).unwrap();
    assert_eq!(d.len(), n);
    assert_eq!(d.kind(), DictionaryKind::ModulationRestricted);
    // atom 0 is the identity on the sample positions
    let id = &d.atoms()[0];
    for i in 0..4 {
        for j in 0..4 {
            assert_eq!(id[(i, j)], c(if i == j { 1. } else { 0. }, 0.));
        }
    }
    let a = measurement_from_dictionary(&d, &[c(1., 0.); 4]).unwrap();
    let pf = partial_fourier::<f64>(n, &omega).unwrap();
    assert_eq!(pf.scales().unwrap(), a.scales().unwrap());
    for j in 0..n {
        for i in 0..4 {
            assert!((a.matrix()[(i, j)] - pf.matrix()[(i, j)]).norm() < 1e-15);
        }
    }
    assert!(restricted_modulation_dictionary::<f64>(13, &omega).is_err());
}

#[test]
fn partial_fourier_structure() {
    let single = partial_fourier::<f64>(5, &SampleSet::new(5, vec![0]).unwrap()).unwrap();
    assert!(single.matrix().columns().all(|c| c == [C64::new(1., 0.)]));

    let full = partial_fourier::<f64>(9, &SampleSet::full(9).unwrap()).unwrap();
    assert!(coherence(&full).unwrap().mu < 1e-12);

    // |<a_l, a_l'>| = |sum_{r<m} e^{2 pi i r (l' - l)/n}| / m
    let (n, m) = (8, 4);
    let pf = partial_fourier::<f64>(n, &SampleSet::new(n, (0..m).collect()).unwrap()).unwrap();
    let expect = (1..n)
        .map(|d| {
            let w = unit_root::<f64>(d as i64, n);
            ((c(1., 0.) - w.powu(m as u32)) / (c(1., 0.) - w)).norm() / m as f64
        })
        .fold(0.0, f64::max);
    assert!((coherence(&pf).unwrap().mu - expect).abs() < 1e-12);
    assert!(pf.matrix().column_norms().iter().all(|v| (v - 1.0).abs() < 1e-14));
}

#[test]
fn random_subset_is_uniform() {
    assert_eq!(random_subset(7, 7, 1).unwrap().indices(), &[0, 1, 2, 3, 4, 5, 6]);
    assert!(random_subset(7, 0, 1).is_err());
    assert!(random_subset(7, 8, 1).is_err());
    assert_eq!(random_subset(50, 10, 4).unwrap(), random_subset(50, 10, 4).unwrap());

    let (n, m, draws) = (10usize, 3usize, 10_000u64);
    let mut counts = vec![0u64; n];
    for seed in 0..draws {
        let s = random_subset(n, m, seed).unwrap();
        assert_eq!(s.len(), m);
        assert!(s.indices().windows(2).all(|w| w[0] < w[1]));
        for &i in s.indices() {
            counts[i] += 1;
        }
    }
    let e = (draws * m as u64) as f64 / n as f64;
    let chi2: f64 = counts.iter().map(|&o| (o as f64 - e).powi(2) / e).sum();
    let crit = ChiSquared::new((n - 1) as f64).unwrap().inverse_cdf(0.99);
    assert!(chi2 < crit, "chi2 = {chi2}, critical {crit}");
}

#[test]
fn partial_fourier_recovers_every_one_sparse_vector() {
    let n = 16;
    let omega = random_subset(n, n / 2, 21).unwrap();
    let a = partial_fourier::<f64>(n, &omega).unwrap();
    for j in 0..n {
        for t in 0..8 {
            let v = unit_root::<f64>(t, 8) * (1.0 + t as f64);
            let b: Vec<C64> = a.matrix().col(j).iter().map(|z| z * v).collect();
            let rep = basis_pursuit(a.matrix(), &b, &SolverOptions::default()).unwrap();
            assert!(rep.is_optimal());
            let x = rep.solution.to_dense();
            for (i, z) in x.iter().enumerate() {
                let e = if i == j { v } else { c(0., 0.) };
                assert!((z - e).norm() < 1e-10, "column {j}, phase {t}");
            }
        }
    }
}
