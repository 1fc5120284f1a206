//! Scalar abstractions shared by the decoder and the scorer.
//!
//! The decoder only needs ordered addition and subtraction, so it runs on
//! integers as well as floats. That is what makes exact optimality checks
//! possible: the arborescence search can be exercised with `i64` weights and
//! compared against enumeration without any rounding slack. The neural
//! scorer needs transcendental functions and is bounded by [`Real`].

use std::fmt::{Debug, Display};
use std::iter::Sum;

use ndarray::ScalarOperand;
use num_traits::{Float, FromPrimitive, NumAssign, NumOps, ToPrimitive, Zero};

/// Edge-score scalar accepted by the decoder.
pub trait Score:
    'static + Copy + PartialOrd + NumOps + Zero + Sum + Debug + Display + Send + Sync
{
    /// Lossy conversion used for reporting score gaps.
    fn to_f64(self) -> f64;

    /// `false` for NaN and infinities. Always `true` for integers.
    fn is_finite_score(self) -> bool;
}

macro_rules! impl_score_int {
    ($($ty:ty),*) => {$(
        impl Score for $ty {
            #[inline]
            fn to_f64(self) -> f64 {
                self as f64
            }

            #[inline]
            fn is_finite_score(self) -> bool {
                true
            }
        }
    )*};
}

macro_rules! impl_score_float {
    ($($ty:ty),*) => {$(
        impl Score for $ty {
            #[inline]
            fn to_f64(self) -> f64 {
                self as f64
            }

            #[inline]
            fn is_finite_score(self) -> bool {
                self.is_finite()
            }
        }
    )*};
}

impl_score_int!(i32, i64);
impl_score_float!(f32, f64);

/// Floating point type used by the scoring model.
///
/// Implemented for `f32` (the default for training and checkpoints) and
/// `f64` (used for gradient checking).
pub trait Real:
    Score + Float + FromPrimitive + ToPrimitive + NumAssign + ScalarOperand + Default + Sum
{
    /// Converts an `f64` constant. Only ever called with representable values.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("constant representable in scalar type")
    }
}

impl Real for f32 {}
impl Real for f64 {}
