//! Floating-point scalar abstraction for the numerical core.

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating-point scalar usable throughout the engine.
///
/// Implemented for `f32` and `f64` via the blanket impl; all tolerances in
/// the crate are quoted for `f64`.
pub trait Scalar:
    Float + FloatConst + NumAssign + FromPrimitive + std::fmt::Debug + std::fmt::Display + Send + Sync + 'static
{
    /// Converts an `f64` constant into this scalar type.
    fn from_f64c(x: f64) -> Self {
        Self::from_f64(x).expect("constant representable in scalar type")
    }

    /// Converts a `usize` count into this scalar type.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }
}

impl<T> Scalar for T where
    T: Float
        + FloatConst
        + NumAssign
        + FromPrimitive
        + std::fmt::Debug
        + std::fmt::Display
        + Send
        + Sync
        + 'static
{
}
