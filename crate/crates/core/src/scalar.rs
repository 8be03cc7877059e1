//! Numeric abstractions shared by the whole crate.
//!
//! Field computations are generic over [`Scalar`] (implemented for `f32` and
//! `f64`). Geometry predicates are generic over [`Coord`], which additionally
//! covers the exact [`Rational`] type so that containment, disjointness and
//! covering decisions can be made without rounding.

use std::fmt::{Debug, Display};
use std::ops::Neg;

use num_rational::Ratio;
use num_traits::{Float, FloatConst, FromPrimitive, Num, ToPrimitive};

/// Exact rational number used for all combinatorial geometry.
pub type Rational = Ratio<i128>;

/// Floating point scalar used for fields, solvers and verification.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Coord + Debug + Display + Default + Send + Sync + 'static
{
    /// Convert an `f64` literal. Never fails for the two implementors.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Coordinate type for geometric predicates: exact rationals or floats.
pub trait Coord: Clone + PartialOrd + Num + Neg<Output = Self> + Debug {
    fn from_ratio(num: i64, den: i64) -> Self;

    /// Largest integer not exceeding `self`.
    fn floor_i64(&self) -> i64;

    fn abs_val(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    /// `2^-n` in this coordinate type (exact for all implementors).
    fn dyadic(n: u32) -> Self {
        Self::from_ratio(1, 1i64 << n)
    }
}

impl Coord for Rational {
    fn from_ratio(num: i64, den: i64) -> Self {
        Ratio::new(num as i128, den as i128)
    }

    fn floor_i64(&self) -> i64 {
        self.floor().to_integer() as i64
    }
}

macro_rules! float_coord {
    ($t:ty) => {
        impl Coord for $t {
            fn from_ratio(num: i64, den: i64) -> Self {
                num as $t / den as $t
            }

            fn floor_i64(&self) -> i64 {
                Float::floor(*self) as i64
            }
        }
    };
}

float_coord!(f32);
float_coord!(f64);

/// Exact rational value of a finite float.
///
/// Every finite `f64` is a dyadic rational; this recovers it exactly as long
/// as the binary exponent fits the `i128` denominator.
pub fn rational_from_f64(x: f64) -> Option<Rational> {
    if !x.is_finite() {
        return None;
    }
    if x == 0.0 {
        return Some(Rational::from_integer(0));
    }
    let (mantissa, exponent, sign) = Float::integer_decode(x);
    let m = sign as i128 * mantissa as i128;
    if exponent >= 0 {
        if exponent > 60 {
            return None;
        }
        Some(Rational::from_integer(m << exponent))
    } else {
        let e = (-exponent) as u32;
        if e > 125 {
            return None;
        }
        Some(Ratio::new(m, 1i128 << e))
    }
}

/// Float value of an exact rational.
pub fn rational_to_scalar<T: Scalar>(q: &Rational) -> T {
    T::lit(*q.numer() as f64 / *q.denom() as f64)
}
