//! Non-Gabor matrix dictionaries and the reduction from a dictionary and a
//! test vector to a measurement matrix, column `j` being `Psi_j h`.

use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::rng::seeded;
use crate::scalar::{norm2, unit_root, Real};
use crate::tfshift::{AtomLabel, MeasurementMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DictionaryKind {
    Gaussian,
    Bernoulli,
    ModulationRestricted,
    Custom,
}

/// Finite family of equally sized `n x m` matrices.
#[derive(Debug, Clone)]
pub struct MatrixDictionary<T> {
    atoms: Vec<CMat<T>>,
    kind: DictionaryKind,
    seed: Option<u64>,
}

impl<T: Real> MatrixDictionary<T> {
    pub fn custom(atoms: Vec<CMat<T>>) -> Result<Self> {
        Self::build(atoms, DictionaryKind::Custom, None)
    }

    fn build(atoms: Vec<CMat<T>>, kind: DictionaryKind, seed: Option<u64>) -> Result<Self> {
        let first = atoms.first().ok_or_else(|| Error::Dimension("dictionary needs at least one atom".into()))?;
        let (n, m) = (first.rows(), first.cols());
        if let Some(a) = atoms.iter().find(|a| a.rows() != n || a.cols() != m) {
            return Err(Error::Dimension(format!("atom of shape {}x{} in a {n}x{m} dictionary", a.rows(), a.cols())));
        }
        Ok(Self { atoms, kind, seed })
    }

    pub fn atoms(&self) -> &[CMat<T>] {
        &self.atoms
    }

    pub fn kind(&self) -> DictionaryKind {
        self.kind
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// `(n, m)` shape shared by all atoms.
    pub fn shape(&self) -> (usize, usize) {
        (self.atoms[0].rows(), self.atoms[0].cols())
    }
}

/// Strictly increasing set of sample positions in `[0, n)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSet {
    n: usize,
    indices: Vec<usize>,
}

impl SampleSet {
    pub fn new(n: usize, indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::Dimension("sample set is empty".into()));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain("sample indices must be strictly increasing".into()));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
            return Err(Error::IndexRange { index: bad, len: n });
        }
        Ok(Self { n, indices })
    }

    pub fn full(n: usize) -> Result<Self> {
        Self::new(n, (0..n).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Uniformly random size-`m` subset of `[0, n)`.
pub fn random_subset(n: usize, m: usize, seed: u64) -> Result<SampleSet> {
    if m == 0 {
        return Err(Error::Dimension("subset size must be at least 1".into()));
    }
    if m > n {
        return Err(Error::Dimension(format!("subset size {m} exceeds n = {n}")));
    }
    let mut rng = seeded(seed);
    let mut idx = rand::seq::index::sample(&mut rng, n, m).into_vec();
    idx.sort_unstable();
    SampleSet::new(n, idx)
}

fn check_shape(n: usize, m: usize, count: usize) -> Result<()> {
    if n == 0 || m == 0 || count == 0 {
        return Err(Error::Dimension(format!("invalid dictionary shape n={n}, m={m}, N={count}")));
    }
    Ok(())
}

/// `N` matrices of shape `n x m` with i.i.d. standard normal entries.
pub fn gaussian_dictionary<T: Real>(n: usize, m: usize, count: usize, seed: u64) -> Result<MatrixDictionary<T>> {
    check_shape(n, m, count)?;
    let mut rng = seeded(seed);
    let atoms = (0..count)
        .map(|_| {
            CMat::from_fn(n, m, |_, _| {
                let g: f64 = rng.sample(StandardNormal);
                Complex::new(T::lit(g), T::zero())
            })
        })
        .collect();
    MatrixDictionary::build(atoms, DictionaryKind::Gaussian, Some(seed))
}

/// `N` matrices of shape `n x m` with i.i.d. equiprobable `+-1` entries.
pub fn bernoulli_dictionary<T: Real>(n: usize, m: usize, count: usize, seed: u64) -> Result<MatrixDictionary<T>> {
    check_shape(n, m, count)?;
    let mut rng = seeded(seed);
    let atoms = (0..count)
        .map(|_| {
            CMat::from_fn(n, m, |_, _| {
                let s = if rng.random::<bool>() { T::one() } else { -T::one() };
                Complex::new(s, T::zero())
            })
        })
        .collect();
    MatrixDictionary::build(atoms, DictionaryKind::Bernoulli, Some(seed))
}

/// The `n` modulation matrices restricted to rows and columns in `omega`.
pub fn restricted_modulation_dictionary<T: Real>(n: usize, omega: &SampleSet) -> Result<MatrixDictionary<T>> {
    if omega.is_empty() {
        return Err(Error::Dimension("sample set is empty".into()));
    }
    if omega.n() != n {
        return Err(Error::Dimension(format!("sample set over [0,{}) used with n = {n}", omega.n())));
    }
    let m = omega.len();
    let atoms = (0..n)
        .map(|ell| {
            let mut a = CMat::zeros(m, m);
            for (i, &r) in omega.indices().iter().enumerate() {
                a[(i, i)] = unit_root::<T>((ell * r) as i64, n);
            }
            a
        })
        .collect();
    MatrixDictionary::build(atoms, DictionaryKind::ModulationRestricted, None)
}

/// Measurement matrix with columns `Psi_j h / ||Psi_j h||`.
///
/// The raw column norms are kept so recovered coefficients can be mapped
/// back onto the unnormalized atoms.
pub fn measurement_from_dictionary<T: Real>(d: &MatrixDictionary<T>, h: &[Complex<T>]) -> Result<MeasurementMatrix<T>> {
    let (n, m) = d.shape();
    if h.len() != m {
        return Err(Error::Dimension(format!("test vector has length {}, atoms have {m} columns", h.len())));
    }
    if norm2(h) == T::zero() {
        return Err(Error::Degenerate("test vector is zero".into()));
    }
    let mut data = CMat::zeros(n, d.len());
    let mut scales = Vec::with_capacity(d.len());
    for (j, atom) in d.atoms().iter().enumerate() {
        let mut col = atom.mul_vec(h);
        let s = norm2(&col);
        if s == T::zero() {
            return Err(Error::Degenerate(format!("atom {j} annihilates the test vector")));
        }
        for z in &mut col {
            *z = *z / s;
        }
        data.col_mut(j).copy_from_slice(&col);
        scales.push(s);
    }
    let labels = (0..d.len()).map(AtomLabel::Atom).collect();
    MeasurementMatrix::new(data, labels, 1, Some(scales))
}

/// Row submatrix of the Fourier matrix, entries `e^{2 pi i r l / n} / sqrt(m)`
/// for `r` in `omega` and `l` in `[0, n)`.
pub fn partial_fourier<T: Real>(n: usize, omega: &SampleSet) -> Result<MeasurementMatrix<T>> {
    if omega.n() != n {
        return Err(Error::Dimension(format!("sample set over [0,{}) used with n = {n}", omega.n())));
    }
    let m = omega.len();
    let s = T::one() / T::lit(m as f64).sqrt();
    let data = CMat::from_fn(m, n, |i, ell| unit_root::<T>((omega.indices()[i] * ell) as i64, n) * s);
    let labels = (0..n).map(AtomLabel::Atom).collect();
    MeasurementMatrix::new(data, labels, 1, Some(vec![T::lit(m as f64).sqrt(); n]))
}
