//! Floating-point abstraction shared by every numeric module.

use std::fmt::{Debug, Display, LowerExp};
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar type used for scores, rates, embeddings and model parameters.
///
/// Implemented for `f32` and `f64`. Text writers rely on the shortest
/// round-trip `Debug` rendering and, for model files, on
/// [`Scalar::ROUND_TRIP_DIGITS`] significant digits in scientific notation.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + FromStr
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + 'static
{
    /// Significant decimal digits that guarantee an exact text round trip.
    const ROUND_TRIP_DIGITS: usize;

    /// Lossless-or-nearest conversion from an `f64` literal.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    /// Conversion from a count.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }
}

impl Scalar for f32 {
    const ROUND_TRIP_DIGITS: usize = 9;
}

impl Scalar for f64 {
    const ROUND_TRIP_DIGITS: usize = 17;
}

/// Renders `v` with [`Scalar::ROUND_TRIP_DIGITS`] significant digits.
pub(crate) fn fmt_round_trip<T: Scalar>(v: T) -> String {
    format!("{:.*e}", T::ROUND_TRIP_DIGITS - 1, v)
}

/// Renders `v` as the shortest decimal string that parses back to `v`.
pub(crate) fn fmt_shortest<T: Scalar>(v: T) -> String {
    format!("{v:?}")
}
