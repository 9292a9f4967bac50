//! Working-precision arithmetic.
//!
//! Every numeric routine in the crate is generic over [`Real`], which is
//! implemented for `f64` and for MPFR floats ([`rug::Float`]). A
//! [`Precision`] value travels alongside the computation and tells the
//! multiprecision backend how many bits to carry; `f64` ignores it.

use std::fmt::{Debug, Display};
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use rug::{Float, Rational};

/// Requested working precision in decimal digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct Precision {
    digits: u32,
}

impl Precision {
    pub const DEFAULT_DIGITS: u32 = 34;

    pub fn digits(digits: u32) -> Self {
        Precision {
            digits: digits.max(1),
        }
    }

    /// Double precision; selects the `f64` backend in [`Backend::for_precision`].
    pub fn double() -> Self {
        Precision { digits: 15 }
    }

    pub fn decimal_digits(&self) -> u32 {
        self.digits
    }

    /// Mantissa bits for the multiprecision backend, including eight guard bits.
    pub fn bits(&self) -> u32 {
        (f64::from(self.digits) * std::f64::consts::LOG2_10).ceil() as u32 + 8
    }
}

impl Default for Precision {
    fn default() -> Self {
        Precision::digits(Self::DEFAULT_DIGITS)
    }
}

/// Which concrete [`Real`] type serves a requested precision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Double,
    Multi,
}

impl Backend {
    pub fn for_precision(prec: Precision) -> Backend {
        if prec.decimal_digits() <= 15 {
            Backend::Double
        } else {
            Backend::Multi
        }
    }
}

/// Real scalar usable by the recurrences, eigensolvers and quadratures.
pub trait Real:
    Clone
    + Debug
    + Display
    + Send
    + Sync
    + PartialOrd
    + PartialOrd<f64>
    + PartialEq<f64>
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + for<'a> Add<&'a Self, Output = Self>
    + for<'a> Sub<&'a Self, Output = Self>
    + for<'a> Mul<&'a Self, Output = Self>
    + for<'a> Div<&'a Self, Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + for<'a> AddAssign<&'a Self>
    + for<'a> SubAssign<&'a Self>
    + for<'a> MulAssign<&'a Self>
    + for<'a> DivAssign<&'a Self>
    + MulAssign<f64>
    + 'static
{
    fn from_f64(v: f64, prec: Precision) -> Self;
    fn from_rational(v: &Rational, prec: Precision) -> Self;
    fn to_f64(&self) -> f64;
    /// Exact conversion of the stored binary value.
    fn to_rational(&self) -> Option<Rational>;

    fn sqrt(self) -> Self;
    fn ln(self) -> Self;
    fn exp(self) -> Self;
    fn abs(self) -> Self;
    fn cos(self) -> Self;
    fn sin(self) -> Self;
    fn powi(self, n: i32) -> Self;
    fn powf(self, e: &Self) -> Self;
    fn pi(prec: Precision) -> Self;

    fn is_finite(&self) -> bool;
    fn is_zero(&self) -> bool;

    /// Unit roundoff of this backend at `prec`.
    fn epsilon(prec: Precision) -> f64;
    /// Round to `bits` significant bits (used for shadow error estimates).
    fn rounded_to_bits(self, bits: u32) -> Self;
    /// Number of mantissa bits actually carried.
    fn mantissa_bits(prec: Precision) -> u32;
    /// Decimal scientific notation carrying every significant digit.
    fn to_sci_string(&self) -> String;

    fn zero(prec: Precision) -> Self {
        Self::from_f64(0.0, prec)
    }

    fn one(prec: Precision) -> Self {
        Self::from_f64(1.0, prec)
    }

    fn from_i64(v: i64, prec: Precision) -> Self {
        Self::from_rational(&Rational::from(v), prec)
    }

    fn signum_i8(&self) -> i8 {
        if *self > 0.0 {
            1
        } else if *self < 0.0 {
            -1
        } else {
            0
        }
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl Real for f64 {
    fn from_f64(v: f64, _prec: Precision) -> Self {
        v
    }

    fn from_rational(v: &Rational, _prec: Precision) -> Self {
        v.to_f64()
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn to_rational(&self) -> Option<Rational> {
        Rational::from_f64(*self)
    }

    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }

    fn ln(self) -> Self {
        f64::ln(self)
    }

    fn exp(self) -> Self {
        f64::exp(self)
    }

    fn abs(self) -> Self {
        f64::abs(self)
    }

    fn cos(self) -> Self {
        f64::cos(self)
    }

    fn sin(self) -> Self {
        f64::sin(self)
    }

    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }

    fn powf(self, e: &Self) -> Self {
        f64::powf(self, *e)
    }

    fn pi(_prec: Precision) -> Self {
        std::f64::consts::PI
    }

    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }

    fn is_zero(&self) -> bool {
        *self == 0.0
    }

    fn epsilon(_prec: Precision) -> f64 {
        f64::EPSILON / 2.0
    }

    fn rounded_to_bits(self, bits: u32) -> Self {
        if bits >= 53 || self == 0.0 || !self.is_finite() {
            return self;
        }
        let shift = 53 - bits;
        let raw = self.to_bits();
        let half = 1u64 << (shift - 1);
        let mask = !((1u64 << shift) - 1);
        f64::from_bits(raw.wrapping_add(half) & mask)
    }

    fn mantissa_bits(_prec: Precision) -> u32 {
        53
    }

    fn to_sci_string(&self) -> String {
        format!("{self:e}")
    }
}

impl Real for Float {
    fn from_f64(v: f64, prec: Precision) -> Self {
        Float::with_val(prec.bits(), v)
    }

    fn from_rational(v: &Rational, prec: Precision) -> Self {
        Float::with_val(prec.bits(), v)
    }

    fn to_f64(&self) -> f64 {
        Float::to_f64(self)
    }

    fn to_rational(&self) -> Option<Rational> {
        Float::to_rational(self)
    }

    fn sqrt(self) -> Self {
        Float::sqrt(self)
    }

    fn ln(self) -> Self {
        Float::ln(self)
    }

    fn exp(self) -> Self {
        Float::exp(self)
    }

    fn abs(self) -> Self {
        Float::abs(self)
    }

    fn cos(self) -> Self {
        Float::cos(self)
    }

    fn sin(self) -> Self {
        Float::sin(self)
    }

    fn powi(self, n: i32) -> Self {
        rug::ops::Pow::pow(self, n)
    }

    fn powf(self, e: &Self) -> Self {
        rug::ops::Pow::pow(self, e)
    }

    fn pi(prec: Precision) -> Self {
        Float::with_val(prec.bits(), rug::float::Constant::Pi)
    }

    fn is_finite(&self) -> bool {
        Float::is_finite(self)
    }

    fn is_zero(&self) -> bool {
        Float::is_zero(self)
    }

    fn epsilon(prec: Precision) -> f64 {
        (-(prec.bits() as f64)).exp2()
    }

    fn rounded_to_bits(self, bits: u32) -> Self {
        let full = self.prec();
        let mut v = self;
        if bits < full {
            v.set_prec(bits);
            v.set_prec(full);
        }
        v
    }

    fn mantissa_bits(prec: Precision) -> u32 {
        prec.bits()
    }

    fn to_sci_string(&self) -> String {
        if self.is_zero() {
            return "0e0".to_string();
        }
        let digits = (f64::from(self.prec()) / std::f64::consts::LOG2_10).ceil() as usize;
        format!("{:.*e}", digits.saturating_sub(1), self)
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone)]
pub struct CompensatedSum<R: Real> {
    sum: R,
    comp: R,
}

impl<R: Real> CompensatedSum<R> {
    pub fn new(prec: Precision) -> Self {
        CompensatedSum {
            sum: R::zero(prec),
            comp: R::zero(prec),
        }
    }

    pub fn add(&mut self, x: R) {
        let t = self.sum.clone() + &x;
        if self.sum.clone().abs() >= x.clone().abs() {
            self.comp += (self.sum.clone() - &t) + &x;
        } else {
            self.comp += (x - &t) + &self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> R {
        self.sum.clone() + &self.comp
    }
}

const RESCALE_LIMIT: f64 = 64.0;

/// A real number stored as `mant · 2^exp2` so that products such as the
/// potential coefficients never overflow the backend's exponent range.
#[derive(Debug, Clone)]
pub struct Scaled<R: Real> {
    pub mant: R,
    pub exp2: i64,
}

impl<R: Real> Scaled<R> {
    pub fn new(mant: R) -> Self {
        let mut s = Scaled { mant, exp2: 0 };
        s.normalize();
        s
    }

    pub fn zero(prec: Precision) -> Self {
        Scaled {
            mant: R::zero(prec),
            exp2: 0,
        }
    }

    pub fn one(prec: Precision) -> Self {
        Scaled {
            mant: R::one(prec),
            exp2: 0,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    pub fn sign(&self) -> i8 {
        self.mant.signum_i8()
    }

    fn normalize(&mut self) {
        if self.mant.is_zero() {
            self.exp2 = 0;
            return;
        }
        let approx = self.mant.to_f64().abs();
        if !approx.is_finite() || approx == 0.0 {
            return;
        }
        let e = approx.log2().floor();
        if e.abs() > RESCALE_LIMIT {
            let shift = e as i64;
            self.mant *= pow2(-shift);
            self.exp2 += shift;
        }
    }

    pub fn mul(&self, other: &Scaled<R>) -> Scaled<R> {
        let mut s = Scaled {
            mant: self.mant.clone() * &other.mant,
            exp2: self.exp2 + other.exp2,
        };
        s.normalize();
        s
    }

    pub fn mul_real(&self, x: &R) -> Scaled<R> {
        let mut s = Scaled {
            mant: self.mant.clone() * x,
            exp2: self.exp2,
        };
        s.normalize();
        s
    }

    pub fn div(&self, other: &Scaled<R>) -> Scaled<R> {
        let mut s = Scaled {
            mant: self.mant.clone() / &other.mant,
            exp2: self.exp2 - other.exp2,
        };
        s.normalize();
        s
    }

    pub fn div_real(&self, x: &R) -> Scaled<R> {
        let mut s = Scaled {
            mant: self.mant.clone() / x,
            exp2: self.exp2,
        };
        s.normalize();
        s
    }

    pub fn recip(&self, prec: Precision) -> Scaled<R> {
        Scaled::one(prec).div(self)
    }

    pub fn neg(&self) -> Scaled<R> {
        Scaled {
            mant: -self.mant.clone(),
            exp2: self.exp2,
        }
    }

    /// Mantissa of `self` expressed relative to `2^exp2`.
    fn mant_at(&self, exp2: i64, prec: Precision) -> R {
        if self.is_zero() {
            return R::zero(prec);
        }
        let shift = self.exp2 - exp2;
        if shift < -(R::mantissa_bits(prec) as i64) - 64 {
            R::zero(prec)
        } else {
            self.mant.clone() * pow2(shift)
        }
    }

    pub fn add(&self, other: &Scaled<R>, prec: Precision) -> Scaled<R> {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let e = self.exp2.max(other.exp2);
        let mut s = Scaled {
            mant: self.mant_at(e, prec) + other.mant_at(e, prec),
            exp2: e,
        };
        s.normalize();
        s
    }

    pub fn sub(&self, other: &Scaled<R>, prec: Precision) -> Scaled<R> {
        self.add(&other.neg(), prec)
    }

    pub fn abs(&self) -> Scaled<R> {
        Scaled {
            mant: self.mant.clone().abs(),
            exp2: self.exp2,
        }
    }

    /// Natural log of the magnitude; `-inf` for zero.
    pub fn ln_abs(&self, prec: Precision) -> R {
        if self.is_zero() {
            return R::from_f64(f64::NEG_INFINITY, prec);
        }
        self.mant.clone().abs().ln() + R::from_f64(std::f64::consts::LN_2, prec) * R::from_i64(self.exp2, prec)
    }

    pub fn ln_abs_f64(&self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        self.mant.to_f64().abs().ln() + self.exp2 as f64 * std::f64::consts::LN_2
    }

    /// Collapse to a plain value; may overflow to infinity or underflow to zero
    /// for the `f64` backend.
    pub fn to_real(&self) -> R {
        if self.exp2 == 0 {
            return self.mant.clone();
        }
        let mut m = self.mant.clone();
        let mut e = self.exp2;
        while e != 0 {
            let step = e.clamp(-1000, 1000);
            m *= pow2(step);
            e -= step;
        }
        m
    }

    pub fn to_f64(&self) -> f64 {
        let m = self.mant.to_f64();
        if m == 0.0 {
            return 0.0;
        }
        let e = self.exp2 as f64 + m.abs().log2();
        if e > 1100.0 {
            return m.signum() * f64::INFINITY;
        }
        if e < -1100.0 {
            return 0.0;
        }
        let half = self.exp2 / 2;
        m * (half as f64).exp2() * ((self.exp2 - half) as f64).exp2()
    }

    pub fn sign_log(&self) -> SignLog {
        SignLog {
            sign: self.sign(),
            log: self.ln_abs_f64(),
        }
    }

    /// `self / other` as a plain value, computed without forming either side.
    pub fn ratio(&self, other: &Scaled<R>) -> Scaled<R> {
        self.div(other)
    }

    /// Compare magnitudes.
    pub fn abs_cmp(&self, other: &Scaled<R>) -> std::cmp::Ordering {
        let a = self.ln_abs_f64();
        let b = other.ln_abs_f64();
        a.partial_cmp(&b).unwrap_or(std::cmp::Ordering::Equal)
    }
}

/// Sign and natural-log magnitude of a value; zero is `(0, -inf)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SignLog {
    pub sign: i8,
    pub log: f64,
}

impl SignLog {
    pub const ZERO: SignLog = SignLog {
        sign: 0,
        log: f64::NEG_INFINITY,
    };

    pub fn value(&self) -> f64 {
        if self.sign == 0 {
            0.0
        } else {
            f64::from(self.sign) * self.log.exp()
        }
    }

    pub fn log10(&self) -> f64 {
        self.log / std::f64::consts::LN_10
    }
}

fn pow2(e: i64) -> f64 {
    (e as f64).exp2()
}
