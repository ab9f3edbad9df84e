//! First-order dual numbers (forward-mode differentiation).
//!
//! `Dual<T>` carries a value and one directional derivative through arbitrary
//! [`crate::scalar::Real`] arithmetic. The connection-extraction and
//! conservation-law code evaluates whole algebraic pipelines on `Dual<f64>`
//! inputs to obtain machine-precision derivatives of derived quantities
//! (tetrads, momenta, currents) without hand-written chain rules.

use std::cmp::Ordering;
use std::fmt;
use std::num::FpCategory;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Rem, Sub, SubAssign};

use num_traits::{Float, FloatConst, Num, NumCast, One, ToPrimitive, Zero};

use crate::scalar::Real;

/// Value plus one directional derivative.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<T> {
    /// Function value.
    pub val: T,
    /// Directional derivative.
    pub dot: T,
}

impl<T: Real> Dual<T> {
    #[inline]
    pub fn new(val: T, dot: T) -> Self {
        Dual { val, dot }
    }

    /// Constant (zero derivative).
    #[inline]
    pub fn constant(val: T) -> Self {
        Dual { val, dot: T::zero() }
    }

    /// Seed variable with unit derivative.
    #[inline]
    pub fn variable(val: T) -> Self {
        Dual { val, dot: T::one() }
    }
}

impl<T: Real> fmt::Display for Dual<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}+{}ε", self.val, self.dot)
    }
}

impl<T: Real> PartialOrd for Dual<T> {
    #[inline]
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.val.partial_cmp(&other.val)
    }
}

impl<T: Real> Add for Dual<T> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Dual::new(self.val + rhs.val, self.dot + rhs.dot)
    }
}

impl<T: Real> Sub for Dual<T> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Dual::new(self.val - rhs.val, self.dot - rhs.dot)
    }
}

impl<T: Real> Mul for Dual<T> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        Dual::new(self.val * rhs.val, self.dot * rhs.val + self.val * rhs.dot)
    }
}

impl<T: Real> Div for Dual<T> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let v = self.val / rhs.val;
        Dual::new(v, (self.dot - v * rhs.dot) / rhs.val)
    }
}

impl<T: Real> Rem for Dual<T> {
    type Output = Self;
    #[inline]
    fn rem(self, rhs: Self) -> Self {
        // Piecewise constant shift: derivative of the left operand survives.
        Dual::new(self.val % rhs.val, self.dot)
    }
}

impl<T: Real> Neg for Dual<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Dual::new(-self.val, -self.dot)
    }
}

impl<T: Real> AddAssign for Dual<T> {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}
impl<T: Real> SubAssign for Dual<T> {
    #[inline]
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}
impl<T: Real> MulAssign for Dual<T> {
    #[inline]
    fn mul_assign(&mut self, rhs: Self) {
        *self = *self * rhs;
    }
}
impl<T: Real> DivAssign for Dual<T> {
    #[inline]
    fn div_assign(&mut self, rhs: Self) {
        *self = *self / rhs;
    }
}

impl<T: Real> Zero for Dual<T> {
    #[inline]
    fn zero() -> Self {
        Dual::constant(T::zero())
    }
    #[inline]
    fn is_zero(&self) -> bool {
        self.val.is_zero() && self.dot.is_zero()
    }
}

impl<T: Real> One for Dual<T> {
    #[inline]
    fn one() -> Self {
        Dual::constant(T::one())
    }
}

impl<T: Real> Num for Dual<T> {
    type FromStrRadixErr = T::FromStrRadixErr;
    fn from_str_radix(str: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        T::from_str_radix(str, radix).map(Dual::constant)
    }
}

impl<T: Real> ToPrimitive for Dual<T> {
    fn to_i64(&self) -> Option<i64> {
        self.val.to_i64()
    }
    fn to_u64(&self) -> Option<u64> {
        self.val.to_u64()
    }
    fn to_f64(&self) -> Option<f64> {
        self.val.to_f64()
    }
}

impl<T: Real> NumCast for Dual<T> {
    fn from<N: ToPrimitive>(n: N) -> Option<Self> {
        T::from(n).map(Dual::constant)
    }
}

impl<T: Real> Float for Dual<T> {
    fn nan() -> Self {
        Dual::constant(T::nan())
    }
    fn infinity() -> Self {
        Dual::constant(T::infinity())
    }
    fn neg_infinity() -> Self {
        Dual::constant(T::neg_infinity())
    }
    fn neg_zero() -> Self {
        Dual::constant(T::neg_zero())
    }
    fn min_value() -> Self {
        Dual::constant(T::min_value())
    }
    fn min_positive_value() -> Self {
        Dual::constant(T::min_positive_value())
    }
    fn max_value() -> Self {
        Dual::constant(T::max_value())
    }
    fn is_nan(self) -> bool {
        self.val.is_nan() || self.dot.is_nan()
    }
    fn is_infinite(self) -> bool {
        self.val.is_infinite()
    }
    fn is_finite(self) -> bool {
        self.val.is_finite() && self.dot.is_finite()
    }
    fn is_normal(self) -> bool {
        self.val.is_normal()
    }
    fn classify(self) -> FpCategory {
        self.val.classify()
    }
    fn floor(self) -> Self {
        Dual::constant(self.val.floor())
    }
    fn ceil(self) -> Self {
        Dual::constant(self.val.ceil())
    }
    fn round(self) -> Self {
        Dual::constant(self.val.round())
    }
    fn trunc(self) -> Self {
        Dual::constant(self.val.trunc())
    }
    fn fract(self) -> Self {
        Dual::new(self.val.fract(), self.dot)
    }
    fn abs(self) -> Self {
        if self.val >= T::zero() {
            self
        } else {
            -self
        }
    }
    fn signum(self) -> Self {
        Dual::constant(self.val.signum())
    }
    fn is_sign_positive(self) -> bool {
        self.val.is_sign_positive()
    }
    fn is_sign_negative(self) -> bool {
        self.val.is_sign_negative()
    }
    fn mul_add(self, a: Self, b: Self) -> Self {
        self * a + b
    }
    fn recip(self) -> Self {
        Dual::one() / self
    }
    fn powi(self, n: i32) -> Self {
        let v = self.val.powi(n);
        let d = T::from(n).unwrap() * self.val.powi(n - 1) * self.dot;
        Dual::new(v, d)
    }
    fn powf(self, n: Self) -> Self {
        // d(x^y) = x^y (y'. ln x + y x'/x)
        let v = self.val.powf(n.val);
        let d = v * (n.dot * self.val.ln() + n.val * self.dot / self.val);
        Dual::new(v, d)
    }
    fn sqrt(self) -> Self {
        let r = self.val.sqrt();
        Dual::new(r, self.dot / (r + r))
    }
    fn exp(self) -> Self {
        let e = self.val.exp();
        Dual::new(e, e * self.dot)
    }
    fn exp2(self) -> Self {
        let e = self.val.exp2();
        Dual::new(e, e * T::LN_2() * self.dot)
    }
    fn ln(self) -> Self {
        Dual::new(self.val.ln(), self.dot / self.val)
    }
    fn log(self, base: Self) -> Self {
        self.ln() / base.ln()
    }
    fn log2(self) -> Self {
        Dual::new(self.val.log2(), self.dot / (self.val * T::LN_2()))
    }
    fn log10(self) -> Self {
        Dual::new(self.val.log10(), self.dot / (self.val * T::LN_10()))
    }
    fn max(self, other: Self) -> Self {
        if self.val >= other.val {
            self
        } else {
            other
        }
    }
    fn min(self, other: Self) -> Self {
        if self.val <= other.val {
            self
        } else {
            other
        }
    }
    fn abs_sub(self, other: Self) -> Self {
        if self.val > other.val {
            self - other
        } else {
            Dual::zero()
        }
    }
    fn cbrt(self) -> Self {
        let r = self.val.cbrt();
        Dual::new(r, self.dot / (T::from(3.0).unwrap() * r * r))
    }
    fn hypot(self, other: Self) -> Self {
        (self * self + other * other).sqrt()
    }
    fn sin(self) -> Self {
        Dual::new(self.val.sin(), self.val.cos() * self.dot)
    }
    fn cos(self) -> Self {
        Dual::new(self.val.cos(), -self.val.sin() * self.dot)
    }
    fn tan(self) -> Self {
        let t = self.val.tan();
        Dual::new(t, (T::one() + t * t) * self.dot)
    }
    fn asin(self) -> Self {
        Dual::new(self.val.asin(), self.dot / (T::one() - self.val * self.val).sqrt())
    }
    fn acos(self) -> Self {
        Dual::new(self.val.acos(), -self.dot / (T::one() - self.val * self.val).sqrt())
    }
    fn atan(self) -> Self {
        Dual::new(self.val.atan(), self.dot / (T::one() + self.val * self.val))
    }
    fn atan2(self, other: Self) -> Self {
        let denom = self.val * self.val + other.val * other.val;
        Dual::new(
            self.val.atan2(other.val),
            (self.dot * other.val - self.val * other.dot) / denom,
        )
    }
    fn sin_cos(self) -> (Self, Self) {
        (self.sin(), self.cos())
    }
    fn exp_m1(self) -> Self {
        Dual::new(self.val.exp_m1(), self.val.exp() * self.dot)
    }
    fn ln_1p(self) -> Self {
        Dual::new(self.val.ln_1p(), self.dot / (T::one() + self.val))
    }
    fn sinh(self) -> Self {
        Dual::new(self.val.sinh(), self.val.cosh() * self.dot)
    }
    fn cosh(self) -> Self {
        Dual::new(self.val.cosh(), self.val.sinh() * self.dot)
    }
    fn tanh(self) -> Self {
        let t = self.val.tanh();
        Dual::new(t, (T::one() - t * t) * self.dot)
    }
    fn asinh(self) -> Self {
        Dual::new(self.val.asinh(), self.dot / (self.val * self.val + T::one()).sqrt())
    }
    fn acosh(self) -> Self {
        Dual::new(self.val.acosh(), self.dot / (self.val * self.val - T::one()).sqrt())
    }
    fn atanh(self) -> Self {
        Dual::new(self.val.atanh(), self.dot / (T::one() - self.val * self.val))
    }
    fn integer_decode(self) -> (u64, i16, i8) {
        self.val.integer_decode()
    }
    fn epsilon() -> Self {
        Dual::constant(T::epsilon())
    }
    fn to_degrees(self) -> Self {
        let k = T::from(180.0).unwrap() / T::PI();
        Dual::new(self.val.to_degrees(), self.dot * k)
    }
    fn to_radians(self) -> Self {
        let k = T::PI() / T::from(180.0).unwrap();
        Dual::new(self.val.to_radians(), self.dot * k)
    }
}

impl<T: Real> FloatConst for Dual<T> {
    fn E() -> Self {
        Dual::constant(T::E())
    }
    fn FRAC_1_PI() -> Self {
        Dual::constant(T::FRAC_1_PI())
    }
    fn FRAC_1_SQRT_2() -> Self {
        Dual::constant(T::FRAC_1_SQRT_2())
    }
    fn FRAC_2_PI() -> Self {
        Dual::constant(T::FRAC_2_PI())
    }
    fn FRAC_2_SQRT_PI() -> Self {
        Dual::constant(T::FRAC_2_SQRT_PI())
    }
    fn FRAC_PI_2() -> Self {
        Dual::constant(T::FRAC_PI_2())
    }
    fn FRAC_PI_3() -> Self {
        Dual::constant(T::FRAC_PI_3())
    }
    fn FRAC_PI_4() -> Self {
        Dual::constant(T::FRAC_PI_4())
    }
    fn FRAC_PI_6() -> Self {
        Dual::constant(T::FRAC_PI_6())
    }
    fn FRAC_PI_8() -> Self {
        Dual::constant(T::FRAC_PI_8())
    }
    fn LN_10() -> Self {
        Dual::constant(T::LN_10())
    }
    fn LN_2() -> Self {
        Dual::constant(T::LN_2())
    }
    fn LOG10_E() -> Self {
        Dual::constant(T::LOG10_E())
    }
    fn LOG2_E() -> Self {
        Dual::constant(T::LOG2_E())
    }
    fn PI() -> Self {
        Dual::constant(T::PI())
    }
    fn SQRT_2() -> Self {
        Dual::constant(T::SQRT_2())
    }
}
