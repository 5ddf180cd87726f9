use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{norm_inf, Real};

/// Sparse coefficient vector of length `N`: a support set plus nonzero values.
///
/// Entries are kept sorted by index; exact zeros are never stored.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SparseCoefficients<T> {
    len: usize,
    entries: Vec<(usize, Complex<T>)>,
}

impl<T: Real> SparseCoefficients<T> {
    pub fn new(len: usize) -> Self {
        Self { len, entries: Vec::new() }
    }

    /// Inserts or overwrites entry `j`. Zero values remove the entry.
    pub fn insert(&mut self, j: usize, v: Complex<T>) -> Result<()> {
        if j >= self.len {
            return Err(Error::IndexRange { index: j, len: self.len });
        }
        match self.entries.binary_search_by_key(&j, |e| e.0) {
            Ok(pos) => {
                if v.norm() == T::zero() {
                    self.entries.remove(pos);
                } else {
                    self.entries[pos].1 = v;
                }
            }
            Err(pos) => {
                if v.norm() != T::zero() {
                    self.entries.insert(pos, (j, v));
                }
            }
        }
        Ok(())
    }

    /// Keeps entries whose modulus exceeds `rel_tol * max|x_j|`.
    pub fn from_dense(x: &[Complex<T>], rel_tol: T) -> Self {
        let cut = rel_tol * norm_inf(x);
        let entries = x
            .iter()
            .enumerate()
            .filter(|(_, z)| z.norm() > cut && z.norm() > T::zero())
            .map(|(j, &z)| (j, z))
            .collect();
        Self { len: x.len(), entries }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// `|Lambda|`.
    pub fn sparsity(&self) -> usize {
        self.entries.len()
    }

    pub fn support(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.0).collect()
    }

    pub fn values(&self) -> Vec<Complex<T>> {
        self.entries.iter().map(|e| e.1).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, Complex<T>)> + '_ {
        self.entries.iter().copied()
    }

    pub fn get(&self, j: usize) -> Complex<T> {
        self.entries
            .binary_search_by_key(&j, |e| e.0)
            .map(|pos| self.entries[pos].1)
            .unwrap_or_else(|_| Complex::new(T::zero(), T::zero()))
    }

    pub fn to_dense(&self) -> Vec<Complex<T>> {
        let mut v = vec![Complex::new(T::zero(), T::zero()); self.len];
        for &(j, z) in &self.entries {
            v[j] = z;
        }
        v
    }

    pub fn norm1(&self) -> T {
        self.entries.iter().map(|e| e.1.norm()).sum()
    }
}
