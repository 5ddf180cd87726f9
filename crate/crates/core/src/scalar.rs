//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real floating-point type the library can be instantiated with (`f32` or `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + rustfft::FftNum
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    /// Smallest tolerance that is meaningful at this precision, floored at `tol`.
    fn tol_floor(tol: f64) -> Self {
        let eps = Self::epsilon().to_f64().unwrap_or(f64::EPSILON);
        Self::lit(tol.max(64.0 * eps))
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub type Cplx<T> = Complex<T>;

/// `e^{2 pi i * num / den}` evaluated with the phase reduced modulo `den`
/// before the conversion to floating point.
pub fn unit_root<T: Real>(num: i64, den: usize) -> Complex<T> {
    let den_i = den as i64;
    let reduced = num.rem_euclid(den_i);
    let theta = T::TAU() * T::lit(reduced as f64) / T::lit(den as f64);
    Complex::from_polar(T::one(), theta)
}

/// Hermitian inner product `<a, b> = sum_q a_q conj(b_q)`.
pub fn inner<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    a.iter()
        .zip(b)
        .fold(Complex::new(T::zero(), T::zero()), |acc, (x, y)| acc + x * y.conj())
}

pub fn norm2<T: Real>(v: &[Complex<T>]) -> T {
    v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
}

pub fn norm1<T: Real>(v: &[Complex<T>]) -> T {
    v.iter().map(|z| z.norm()).sum()
}

pub fn norm_inf<T: Real>(v: &[Complex<T>]) -> T {
    v.iter().map(|z| z.norm()).fold(T::zero(), T::max)
}

/// Complex phase `z / |z|`, zero at the origin.
pub fn phase<T: Real>(z: Complex<T>) -> Complex<T> {
    let r = z.norm();
    if r > T::zero() {
        z / r
    } else {
        Complex::new(T::zero(), T::zero())
    }
}

/// Complex soft thresholding: shrinks the modulus by `tau`, keeps the phase.
pub fn soft_threshold<T: Real>(z: Complex<T>, tau: T) -> Complex<T> {
    let r = z.norm();
    if r <= tau {
        Complex::new(T::zero(), T::zero())
    } else {
        z * ((r - tau) / r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_root_reduces_large_phases() {
        let a: Complex<f64> = unit_root(1_000_003 * 7 + 2, 7);
        let b: Complex<f64> = unit_root(2 + 7 * 5, 7);
        assert!((a - b).norm() < 1e-15);
        let c: Complex<f64> = unit_root(-1, 4);
        assert!((c - Complex::new(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn soft_threshold_keeps_phase() {
        let z = Complex::new(3.0f64, 4.0);
        let s = soft_threshold(z, 1.0);
        assert!((s.norm() - 4.0).abs() < 1e-15);
        assert!((phase(s) - phase(z)).norm() < 1e-15);
        assert_eq!(soft_threshold(z, 6.0), Complex::new(0.0, 0.0));
    }
}
