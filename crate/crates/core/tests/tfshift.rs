use num_complex::Complex;
use proptest::prelude::*;
use sparse_ident::analysis::{coherence, gabor_coherence};
use sparse_ident::scalar::{inner, norm2, unit_root};
use sparse_ident::sparse::SparseCoefficients;
use sparse_ident::tfshift::*;
use sparse_ident::{Window64, C64};

fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

fn dist(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn vec_strategy(n: usize) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| c(a, b)), n)
}

#[test]
fn translate_and_modulate_small_cases() {
    let h = vec![c(1., 0.), c(2., 0.), c(3., 0.)];
    assert_eq!(translate(&h, 0).unwrap(), h);
    assert_eq!(translate(&h, 1).unwrap(), vec![c(2., 0.), c(3., 0.), c(1., 0.)]);
    assert!(translate(&h, 3).is_err());

    let ones = vec![c(1., 0.); 4];
    let m = modulate(&ones, 2).unwrap();
    assert!(dist(&m, &[c(1., 0.), c(-1., 0.), c(1., 0.), c(-1., 0.)]) < 1e-15);
    assert!(modulate(&ones, 4).is_err());
    for ell in 1..4 {
        assert!(inner(&modulate(&ones, ell).unwrap(), &ones).norm() < 1e-14);
    }
}

proptest! {
    #[test]
    fn translation_is_a_cyclic_group(h in vec_strategy(9), p in 0usize..9) {
        let back = translate(&translate(&h, p).unwrap(), (9 - p) % 9).unwrap();
        prop_assert!(dist(&back, &h) < 1e-15);
        prop_assert!((norm2(&translate(&h, p).unwrap()) - norm2(&h)).abs() < 1e-12);
        prop_assert!((norm2(&modulate(&h, p).unwrap()) - norm2(&h)).abs() < 1e-12);
        prop_assert_eq!(modulate(&h, 0).unwrap(), h);
    }

    #[test]
    fn tf_shift_commutation(seed in any::<u64>(), ell in 0usize..11, p in 0usize..11) {
        // (T_p M_l h)_q = e^{2 pi i l (p+q) / n} h_{p+q}, so M_l T_p h = e^{-2 pi i l p / n} T_p M_l h
        let h = random_window::<f64>(11, seed).unwrap();
        let s = tf_shift(&h, TfIndex::new(ell as i64, p as i64, 11)).unwrap();
        let swapped = translate(&modulate(h.entries(), ell).unwrap(), p).unwrap();
        let phase = unit_root::<f64>(-((ell * p) as i64), 11);
        let expect: Vec<_> = swapped.iter().map(|z| z * phase).collect();
        prop_assert!(dist(&s, &expect) < 1e-12);
        prop_assert!((norm2(&s) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inner_products_reduce_to_ambiguity(seed in any::<u64>(), a in 0usize..7, b in 0usize..7, c2 in 0usize..7, d in 0usize..7) {
        let n = 7;
        let h = random_window::<f64>(n, seed).unwrap();
        let x = tf_shift(&h, TfIndex::new(a as i64, b as i64, n)).unwrap();
        let y = tf_shift(&h, TfIndex::new(c2 as i64, d as i64, n)).unwrap();
        let z = tf_shift(&h, TfIndex::new(a as i64 - c2 as i64, b as i64 - d as i64, n)).unwrap();
        prop_assert!((inner(&x, &y).norm() - inner(&z, h.entries()).norm()).abs() < 1e-12);
    }
}

#[test]
fn tf_shift_special_indices() {
    let h = random_window::<f64>(6, 3).unwrap();
    assert!(dist(&tf_shift(&h, TfIndex::new(0, 0, 6)).unwrap(), h.entries()) < 1e-15);
    for p in 0..6 {
        let t = tf_shift(&h, TfIndex::new(0, p as i64, 6)).unwrap();
        assert!(dist(&t, &translate(h.entries(), p).unwrap()) < 1e-15);
    }
}

#[test]
fn window_constructors() {
    let h = alltop_window::<f64>(5).unwrap();
    assert!((h.entries()[0].re - 0.447213595499958).abs() < 1e-14);
    assert!(!h.non_prime_warning());
    assert!(alltop_window::<f64>(6).unwrap().non_prime_warning());
    assert!(alltop_window::<f64>(0).is_err());
    for q in 0..11 {
        assert!((alltop_window::<f64>(11).unwrap().entries()[q].norm() - 1.0 / 11f64.sqrt()).abs() < 1e-12);
    }
    let r = random_window::<f64>(30, 99).unwrap();
    assert!((norm2(r.entries()) - 1.0).abs() < 1e-12);
    assert!(r.entries().iter().all(|z| (z.norm() - 1.0 / 30f64.sqrt()).abs() < 1e-12));
    assert_eq!(r, random_window::<f64>(30, 99).unwrap());
    assert_ne!(r, random_window::<f64>(30, 100).unwrap());
}

#[test]
fn dft_examples() {
    let mut e0 = vec![c(0., 0.); 8];
    e0[0] = c(1., 0.);
    let d = dft(&Window64::custom(e0).unwrap());
    assert!(d.entries().iter().all(|z| (z - c(1.0 / 8f64.sqrt(), 0.)).norm() < 1e-15));

    // the kernel is e^{+2 pi i j q / n}
    let mut e1 = vec![c(0., 0.); 8];
    e1[1] = c(1., 0.);
    let d = dft(&Window64::custom(e1).unwrap());
    for j in 0..8 {
        assert!((d.entries()[j] - unit_root::<f64>(j as i64, 8) / 8f64.sqrt()).norm() < 1e-15);
    }
    let h = random_window::<f64>(13, 5).unwrap();
    assert!((norm2(dft(&h).entries()) - 1.0).abs() < 1e-12);
}

#[test]
fn fourier_transform_preserves_coherence() {
    for n in [8, 13, 30] {
        for seed in 0..20 {
            let h = random_window::<f64>(n, seed).unwrap();
            let a = gabor_coherence(&h).mu;
            let b = gabor_coherence(&dft(&h)).mu;
            assert!((a - b).abs() < 1e-10, "n = {n}, seed = {seed}: {a} vs {b}");
        }
    }
}

#[test]
fn alltop_ambiguity_is_flat() {
    for n in [5usize, 7, 11, 13] {
        let h = alltop_window::<f64>(n).unwrap();
        for ell in 0..n {
            for p in 0..n {
                if ell == 0 && p == 0 {
                    continue;
                }
                let v = inner(&tf_shift(&h, TfIndex::new(ell as i64, p as i64, n)).unwrap(), h.entries()).norm();
                // pure modulations are orthogonal to h; every other shift has modulus 1/sqrt(n)
                let expect = if p == 0 { 0.0 } else { 1.0 / (n as f64).sqrt() };
                assert!((v - expect).abs() < 1e-10, "n = {n}, ({ell}, {p}): {v}");
            }
        }
    }
}

#[test]
fn coherence_equals_maximal_ambiguity() {
    // exhaustive double loop over all column pairs against the ambiguity maximum
    for n in [4usize, 9, 16] {
        let h = random_window::<f64>(n, n as u64).unwrap();
        let a = gabor_matrix(&h);
        let mut pairs = 0.0f64;
        for i in 0..a.cols() {
            for j in i + 1..a.cols() {
                pairs = pairs.max(inner(a.matrix().col(i), a.matrix().col(j)).norm());
            }
        }
        let mut amb = 0.0f64;
        for ell in 0..n {
            for p in 0..n {
                if ell + p > 0 {
                    amb = amb.max(inner(&tf_shift(&h, TfIndex::new(ell as i64, p as i64, n)).unwrap(), h.entries()).norm());
                }
            }
        }
        assert!((pairs - amb).abs() < 1e-12);
    }
}

#[test]
fn gabor_matrix_layout() {
    let s = 1.0 / 2f64.sqrt();
    let h = Window64::custom(vec![c(s, 0.), c(s, 0.)]).unwrap();
    let a = gabor_matrix(&h);
    assert_eq!((a.rows(), a.cols()), (2, 4));
    // column j = l n + p; (l, p) = (0, 1)
    assert!(dist(a.matrix().col(1), &[c(s, 0.), c(s, 0.)]) < 1e-15);
    assert_eq!(a.column_map()[3], AtomLabel::Tf(TfIndex::new(1, 1, 2)));

    let a7 = gabor_matrix(&alltop_window::<f64>(7).unwrap());
    assert!(a7.matrix().column_norms().iter().all(|v| (v - 1.0).abs() < 1e-12));
    assert_eq!(gabor_matrix(&alltop_window::<f64>(5).unwrap()).matrix().rank(), 5);
}

#[test]
fn concatenated_systems() {
    let h1 = random_window::<f64>(30, 1).unwrap();
    let h2 = random_window::<f64>(30, 2).unwrap();
    let single = gabor_matrix(&h1);
    let one = concat_gabor(std::slice::from_ref(&h1)).unwrap();
    assert_eq!(one.matrix(), single.matrix());

    let dup = concat_gabor(&[h1.clone(), h1.clone()]).unwrap();
    assert_eq!(dup.rows(), 60);
    assert!(dup.matrix().column_norms().iter().all(|v| (v - 1.0).abs() < 1e-10));
    let mu1 = gabor_coherence(&h1).mu;
    assert!((coherence(&dup).unwrap().mu - mu1).abs() < 1e-12);

    let mu2 = gabor_coherence(&h2).mu;
    let pair = coherence(&concat_gabor(&[h1.clone(), h2]).unwrap()).unwrap().mu;
    assert!(pair <= (mu1 + mu2) / 2.0 + 1e-12);
    assert!(pair <= mu1.max(mu2));

    let short = random_window::<f64>(29, 1).unwrap();
    assert!(concat_gabor(&[h1, short]).is_err());
}

#[test]
fn apply_gamma_matches_dense_product() {
    let n = 16;
    let h = random_window::<f64>(n, 8).unwrap();
    let a = gabor_matrix(&h);
    let mut x = SparseCoefficients::new(n * n);
    x.insert(17, c(0.5, -1.0)).unwrap();
    x.insert(100, c(-2.0, 0.25)).unwrap();
    x.insert(255, c(0.0, 1.0)).unwrap();
    let direct = apply_gamma(&x, &h).unwrap();
    assert!(dist(&direct, &a.matrix().mul_vec(&x.to_dense())) < 1e-12);

    let mut single = SparseCoefficients::new(n * n);
    single.insert(TfIndex::new(0, 3, n).column(n), c(1., 0.)).unwrap();
    assert!(dist(&apply_gamma(&single, &h).unwrap(), &translate(h.entries(), 3).unwrap()) < 1e-15);
    assert!(apply_gamma(&SparseCoefficients::new(n * n), &h).unwrap().iter().all(|z| z.norm() == 0.0));
    assert!(apply_gamma(&SparseCoefficients::new(10), &h).is_err());
}
