//! Time-frequency shifts on `C^n`, windows, and Gabor measurement matrices.
//!
//! Translation is cyclic, `(T_p h)_q = h_{(p+q) mod n}`, and modulation is
//! `(M_l h)_q = e^{2 pi i l q / n} h_q`. The Gabor system of a window `h` is
//! the set of `n^2` vectors `M_l T_p h`; as columns of a matrix they are
//! enumerated frequency-major, column `j = l n + p`.

use num_complex::Complex;
use rand::Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::rng::seeded;
use crate::scalar::{norm2, unit_root, Real};
use crate::sparse::SparseCoefficients;

/// How a window was produced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    Alltop,
    RandomUnimodular,
    DftOf(Box<WindowKind>),
    Custom,
}

/// Unit-norm test vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Window<T> {
    entries: Vec<Complex<T>>,
    kind: WindowKind,
    seed: Option<u64>,
    /// Set for Alltop windows of composite length, where the coherence
    /// guarantee does not apply.
    non_prime_warning: bool,
}

impl<T: Real> Window<T> {
    /// Wraps arbitrary entries, normalizing them to unit norm.
    pub fn custom(entries: Vec<Complex<T>>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Domain("window length must be at least 1".into()));
        }
        let nrm = norm2(&entries);
        if nrm == T::zero() || !nrm.is_finite() {
            return Err(Error::Degenerate("window has zero norm".into()));
        }
        let entries = entries.into_iter().map(|z| z / nrm).collect();
        Ok(Self { entries, kind: WindowKind::Custom, seed: None, non_prime_warning: false })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Complex<T>] {
        &self.entries
    }

    pub fn kind(&self) -> &WindowKind {
        &self.kind
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn non_prime_warning(&self) -> bool {
        self.non_prime_warning
    }
}

/// Time-frequency index `(l, p)`: modulation `l`, translation `p`, both in `[0, n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TfIndex {
    pub ell: usize,
    pub p: usize,
}

impl TfIndex {
    /// Builds an index with both components reduced modulo `n`.
    pub fn new(ell: i64, p: i64, n: usize) -> Self {
        let n_i = n as i64;
        Self { ell: ell.rem_euclid(n_i) as usize, p: p.rem_euclid(n_i) as usize }
    }

    pub fn column(self, n: usize) -> usize {
        self.ell * n + self.p
    }

    pub fn from_column(j: usize, n: usize) -> Self {
        Self { ell: j / n, p: j % n }
    }
}

/// Label attached to a measurement-matrix column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AtomLabel {
    Tf(TfIndex),
    Atom(usize),
}

impl std::fmt::Display for AtomLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AtomLabel::Tf(i) => write!(f, "(l={}, p={})", i.ell, i.p),
            AtomLabel::Atom(j) => write!(f, "#{j}"),
        }
    }
}

/// Dense measurement matrix `A = (Psi h)` plus column bookkeeping.
#[derive(Debug, Clone)]
pub struct MeasurementMatrix<T> {
    data: CMat<T>,
    column_map: Vec<AtomLabel>,
    window_count: usize,
    /// Norms of the raw columns before normalization (ensemble case).
    scales: Option<Vec<T>>,
}

impl<T: Real> MeasurementMatrix<T> {
    pub fn new(data: CMat<T>, column_map: Vec<AtomLabel>, window_count: usize, scales: Option<Vec<T>>) -> Result<Self> {
        if column_map.len() != data.cols() {
            return Err(Error::Dimension(format!(
                "column map has {} labels for {} columns",
                column_map.len(),
                data.cols()
            )));
        }
        if window_count == 0 {
            return Err(Error::Domain("window count must be at least 1".into()));
        }
        Ok(Self { data, column_map, window_count, scales })
    }

    /// Plain matrix with columns labelled by their index.
    pub fn from_matrix(data: CMat<T>) -> Self {
        let column_map = (0..data.cols()).map(AtomLabel::Atom).collect();
        Self { data, column_map, window_count: 1, scales: None }
    }

    pub fn matrix(&self) -> &CMat<T> {
        &self.data
    }

    pub fn rows(&self) -> usize {
        self.data.rows()
    }

    pub fn cols(&self) -> usize {
        self.data.cols()
    }

    pub fn column_map(&self) -> &[AtomLabel] {
        &self.column_map
    }

    pub fn window_count(&self) -> usize {
        self.window_count
    }

    pub fn scales(&self) -> Option<&[T]> {
        self.scales.as_deref()
    }

    /// True when this is a single-window Gabor system (`n` rows, `n^2` columns).
    pub fn is_full_gabor(&self) -> bool {
        self.window_count == 1
            && self.cols() == self.rows() * self.rows()
            && self.column_map.iter().all(|l| matches!(l, AtomLabel::Tf(_)))
    }

    /// Maps coefficients of the normalized columns back to the raw atoms
    /// (`x_raw_j = x_j / scale_j`). Identity when no scales are recorded.
    pub fn to_atom_coefficients(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        match &self.scales {
            Some(s) => x.iter().zip(s).map(|(z, &sc)| z / sc).collect(),
            None => x.to_vec(),
        }
    }
}

fn check_index(i: usize, n: usize) -> Result<()> {
    if i >= n {
        Err(Error::IndexRange { index: i, len: n })
    } else {
        Ok(())
    }
}

/// Cyclic translation `(T_p h)_q = h_{(p+q) mod n}`.
pub fn translate<T: Real>(h: &[Complex<T>], p: usize) -> Result<Vec<Complex<T>>> {
    let n = h.len();
    check_index(p, n)?;
    Ok((0..n).map(|q| h[(p + q) % n]).collect())
}

/// Modulation `(M_l h)_q = e^{2 pi i l q / n} h_q`.
pub fn modulate<T: Real>(h: &[Complex<T>], ell: usize) -> Result<Vec<Complex<T>>> {
    let n = h.len();
    check_index(ell, n)?;
    Ok(h.iter()
        .enumerate()
        .map(|(q, &z)| unit_root::<T>((ell * q) as i64, n) * z)
        .collect())
}

/// `M_l T_p h`.
pub fn tf_shift<T: Real>(h: &Window<T>, idx: TfIndex) -> Result<Vec<Complex<T>>> {
    tf_shift_raw(h.entries(), idx)
}

pub(crate) fn tf_shift_raw<T: Real>(h: &[Complex<T>], idx: TfIndex) -> Result<Vec<Complex<T>>> {
    let n = h.len();
    check_index(idx.ell, n)?;
    check_index(idx.p, n)?;
    Ok((0..n)
        .map(|q| unit_root::<T>((idx.ell * q) as i64, n) * h[(idx.p + q) % n])
        .collect())
}

pub fn is_prime(n: usize) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Alltop window `h_q = n^{-1/2} e^{2 pi i q^3 / n}`.
///
/// Defined for every `n >= 1`; composite `n` sets the non-prime warning.
pub fn alltop_window<T: Real>(n: usize) -> Result<Window<T>> {
    if n == 0 {
        return Err(Error::Domain("Alltop window needs n >= 1".into()));
    }
    let scale = T::one() / T::lit(n as f64).sqrt();
    let entries = (0..n)
        .map(|q| {
            // q^3 mod n without overflow
            let q = q as u128;
            let cube = (q * q % n as u128) * q % n as u128;
            unit_root::<T>(cube as i64, n) * scale
        })
        .collect();
    Ok(Window { entries, kind: WindowKind::Alltop, seed: None, non_prime_warning: !is_prime(n) })
}

/// Random unimodular window `h_q = n^{-1/2} e^{2 pi i y_q}`, `y_q ~ U[0, 1)`.
pub fn random_window<T: Real>(n: usize, seed: u64) -> Result<Window<T>> {
    if n == 0 {
        return Err(Error::Domain("random window needs n >= 1".into()));
    }
    let mut rng = seeded(seed);
    let scale = T::one() / T::lit(n as f64).sqrt();
    let entries = (0..n)
        .map(|_| {
            let y: f64 = rng.random();
            Complex::from_polar(scale, T::TAU() * T::lit(y))
        })
        .collect();
    Ok(Window { entries, kind: WindowKind::RandomUnimodular, seed: Some(seed), non_prime_warning: false })
}

/// Unitary transform `hat h_j = n^{-1/2} sum_q h_q e^{+2 pi i j q / n}`.
pub fn dft<T: Real>(h: &Window<T>) -> Window<T> {
    let n = h.len();
    let mut buf = h.entries().to_vec();
    // rustfft's inverse transform uses the e^{+2 pi i} kernel, unnormalized
    FftPlanner::<T>::new().plan_fft_inverse(n).process(&mut buf);
    let s = T::one() / T::lit(n as f64).sqrt();
    for z in &mut buf {
        *z = *z * s;
    }
    Window {
        entries: buf,
        kind: WindowKind::DftOf(Box::new(h.kind().clone())),
        seed: h.seed(),
        non_prime_warning: h.non_prime_warning(),
    }
}

fn gabor_block<T: Real>(h: &[Complex<T>]) -> CMat<T> {
    let n = h.len();
    let mut m = CMat::zeros(n, n * n);
    for ell in 0..n {
        for p in 0..n {
            let col = m.col_mut(ell * n + p);
            for (q, c) in col.iter_mut().enumerate() {
                *c = unit_root::<T>((ell * q) as i64, n) * h[(p + q) % n];
            }
        }
    }
    m
}

fn tf_labels(n: usize) -> Vec<AtomLabel> {
    (0..n * n).map(|j| AtomLabel::Tf(TfIndex::from_column(j, n))).collect()
}

/// `n x n^2` Gabor matrix with columns `M_l T_p h` in frequency-major order.
pub fn gabor_matrix<T: Real>(h: &Window<T>) -> MeasurementMatrix<T> {
    let n = h.len();
    MeasurementMatrix { data: gabor_block(h.entries()), column_map: tf_labels(n), window_count: 1, scales: None }
}

/// Stacked Gabor matrices of several windows, scaled by `1/sqrt(r)`.
pub fn concat_gabor<T: Real>(windows: &[Window<T>]) -> Result<MeasurementMatrix<T>> {
    let r = windows.len();
    let n = windows.first().map(Window::len).ok_or_else(|| Error::Dimension("no windows".into()))?;
    if let Some(w) = windows.iter().find(|w| w.len() != n) {
        return Err(Error::Dimension(format!("window lengths {} and {} differ", n, w.len())));
    }
    if r == 1 {
        return Ok(gabor_matrix(&windows[0]));
    }
    let blocks: Vec<CMat<T>> = windows.iter().map(|w| gabor_block(w.entries())).collect();
    let s = T::one() / T::lit(r as f64).sqrt();
    let data = CMat::from_fn(r * n, n * n, |i, j| blocks[i / n][(i % n, j)] * s);
    Ok(MeasurementMatrix { data, column_map: tf_labels(n), window_count: r, scales: None })
}

/// `Gamma h = sum_{(l,p)} x_{lp} M_l T_p h` by direct summation over the support.
///
/// Coefficients are indexed by Gabor column, `j = l n + p`.
pub fn apply_gamma<T: Real>(x: &SparseCoefficients<T>, h: &Window<T>) -> Result<Vec<Complex<T>>> {
    let n = h.len();
    if x.len() != n * n {
        return Err(Error::Dimension(format!("coefficient length {} != n^2 = {}", x.len(), n * n)));
    }
    let mut out = vec![Complex::new(T::zero(), T::zero()); n];
    for (j, v) in x.iter() {
        let atom = tf_shift_raw(h.entries(), TfIndex::from_column(j, n))?;
        for (o, a) in out.iter_mut().zip(atom) {
            *o = *o + a * v;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::inner;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn translate_examples() {
        let h = vec![c(1., 0.), c(2., 0.), c(3., 0.)];
        assert_eq!(translate(&h, 0).unwrap(), h);
        assert_eq!(translate(&h, 1).unwrap(), vec![c(2., 0.), c(3., 0.), c(1., 0.)]);
        assert!(matches!(translate(&h, 3), Err(Error::IndexRange { index: 3, len: 3 })));
    }

    #[test]
    fn modulate_examples() {
        let ones = vec![c(1., 0.); 4];
        let m = modulate(&ones, 2).unwrap();
        let expect = [1., -1., 1., -1.];
        for (z, e) in m.iter().zip(expect) {
            assert!((z - c(e, 0.)).norm() < 1e-15);
        }
        assert_eq!(modulate(&ones, 0).unwrap(), ones);
        for ell in 1..4 {
            assert!(inner(&modulate(&ones, ell).unwrap(), &ones).norm() < 1e-14);
        }
        assert!(modulate(&ones, 4).is_err());
    }

    #[test]
    fn tf_index_reduction_and_columns() {
        let i = TfIndex::new(-1, 7, 5);
        assert_eq!(i, TfIndex { ell: 4, p: 2 });
        assert_eq!(i.column(5), 22);
        assert_eq!(TfIndex::from_column(22, 5), i);
    }

    #[test]
    fn alltop_first_entry_and_modulus() {
        let h = alltop_window::<f64>(5).unwrap();
        assert!((h.entries()[0] - c(1.0 / 5f64.sqrt(), 0.)).norm() < 1e-15);
        assert!(!h.non_prime_warning());
        let h11 = alltop_window::<f64>(11).unwrap();
        for z in h11.entries() {
            assert!((z.norm() - 1.0 / 11f64.sqrt()).abs() < 1e-12);
        }
        assert!(alltop_window::<f64>(12).unwrap().non_prime_warning());
        assert!(matches!(alltop_window::<f64>(0), Err(Error::Domain(_))));
    }

    #[test]
    fn dft_of_delta_is_flat() {
        let mut e0 = vec![c(0., 0.); 6];
        e0[0] = c(1., 0.);
        let h = dft(&Window::custom(e0).unwrap());
        for z in h.entries() {
            assert!((z - c(1.0 / 6f64.sqrt(), 0.)).norm() < 1e-15);
        }
        assert_eq!(h.kind(), &WindowKind::DftOf(Box::new(WindowKind::Custom)));
    }

    #[test]
    fn dft_uses_positive_kernel() {
        let h = random_window::<f64>(7, 3).unwrap();
        let hh = dft(&h);
        let n = 7;
        for j in 0..n {
            let direct: Complex<f64> = (0..n)
                .map(|q| h.entries()[q] * unit_root::<f64>((j * q) as i64, n))
                .sum::<Complex<f64>>()
                / (n as f64).sqrt();
            assert!((direct - hh.entries()[j]).norm() < 1e-14);
        }
    }

    #[test]
    fn two_point_gabor_column() {
        let s = 1.0 / 2f64.sqrt();
        let h = Window::custom(vec![c(s, 0.), c(s, 0.)]).unwrap();
        let a = gabor_matrix(&h);
        let col = a.matrix().col(TfIndex { ell: 0, p: 1 }.column(2));
        assert!((col[0] - c(s, 0.)).norm() < 1e-15);
        assert!((col[1] - c(s, 0.)).norm() < 1e-15);
        assert_eq!(a.column_map()[1], AtomLabel::Tf(TfIndex { ell: 0, p: 1 }));
    }

    #[test]
    fn gabor_columns_unit_norm_and_full_rank() {
        let a = gabor_matrix(&alltop_window::<f64>(7).unwrap());
        for nrm in a.matrix().column_norms() {
            assert!((nrm - 1.0).abs() < 1e-12);
        }
        assert!(a.is_full_gabor());
        let a5 = gabor_matrix(&alltop_window::<f64>(5).unwrap());
        assert_eq!(a5.matrix().rank(), 5);
    }

    #[test]
    fn concat_rejects_mismatched_lengths() {
        let w = vec![random_window::<f64>(4, 1).unwrap(), random_window::<f64>(5, 2).unwrap()];
        assert!(matches!(concat_gabor(&w), Err(Error::Dimension(_))));
    }

    #[test]
    fn concat_single_window_is_plain_gabor() {
        let h = random_window::<f64>(6, 9).unwrap();
        let a = concat_gabor(std::slice::from_ref(&h)).unwrap();
        assert_eq!(a.matrix(), gabor_matrix(&h).matrix());
        let b = concat_gabor(&[h.clone(), random_window(6, 10).unwrap()]).unwrap();
        assert_eq!(b.rows(), 12);
        assert_eq!(b.window_count(), 2);
        for nrm in b.matrix().column_norms() {
            assert!((nrm - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn apply_gamma_simple_cases() {
        let h = random_window::<f64>(8, 4).unwrap();
        let empty = SparseCoefficients::<f64>::new(64);
        assert!(apply_gamma(&empty, &h).unwrap().iter().all(|z| z.norm() == 0.0));
        let mut x = SparseCoefficients::new(64);
        x.insert(TfIndex { ell: 0, p: 3 }.column(8), c(1., 0.)).unwrap();
        let y = apply_gamma(&x, &h).unwrap();
        let t = translate(h.entries(), 3).unwrap();
        for (u, v) in y.iter().zip(&t) {
            assert!((u - v).norm() < 1e-15);
        }
    }

    #[test]
    fn f32_instantiation() {
        let h = alltop_window::<f32>(11).unwrap();
        let nrm = norm2(h.entries());
        assert!((nrm - 1.0).abs() < 1e-6);
        let a = gabor_matrix(&h);
        assert_eq!(a.cols(), 121);
    }
}
