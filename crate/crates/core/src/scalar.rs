//! Scalar abstractions.
//!
//! Floating-point numerics (eigensolvers, Bessel functions, quadrature,
//! kernel operators) are written against [`Real`], which both `f32` and
//! `f64` satisfy. The exact transfer-probability recursion only needs field
//! operations and is written against [`Field`], so it also runs over
//! arbitrary-precision rationals.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::{Float, FloatConst, FromPrimitive, Num, NumAssign, ToPrimitive};

/// Real floating-point scalar.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + ToPrimitive
        + NumAssign
        + Sum
        + Debug
        + Display
        + Default
        + Send
        + Sync
        + 'static
{
}

/// Field scalar for exact or floating recursions.
pub trait Field: Clone + Num + NumAssign + FromPrimitive + Debug {
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }
}

impl<T> Field for T where T: Clone + Num + NumAssign + FromPrimitive + Debug {}

/// Exact rational scalar.
pub type Rational = Ratio<BigInt>;
