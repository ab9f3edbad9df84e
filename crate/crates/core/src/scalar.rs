//! Scalar abstraction for the numerical kernels.
//!
//! Everything in this crate is written against [`Real`], which is satisfied by
//! `f32`, `f64` and the forward-mode [`crate::dual::Dual`] scalar. Complex
//! arithmetic is `num_complex::Complex<T>` throughout.

use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Float, FloatConst};

/// Real scalar the library is generic over.
pub trait Real: Float + FloatConst + Debug + Display + 'static {}

impl<T> Real for T where T: Float + FloatConst + Debug + Display + 'static {}

/// Complex number over the generic scalar.
pub type C<T> = Complex<T>;

/// Converts an `f64` literal into the working scalar type.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from(x).expect("literal not representable in scalar type")
}

/// `0 + 0i`.
#[inline]
pub fn czero<T: Real>() -> C<T> {
    Complex::new(T::zero(), T::zero())
}

/// `1 + 0i`.
#[inline]
pub fn cone<T: Real>() -> C<T> {
    Complex::new(T::one(), T::zero())
}

/// `0 + 1i`.
#[inline]
pub fn ci<T: Real>() -> C<T> {
    Complex::new(T::zero(), T::one())
}

/// Real number promoted to complex.
#[inline]
pub fn cre<T: Real>(x: T) -> C<T> {
    Complex::new(x, T::zero())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literals_round_trip() {
        let x: f64 = lit(0.5);
        assert_eq!(x, 0.5);
        let y: f32 = lit(2.0);
        assert_eq!(y, 2.0);
    }
}
