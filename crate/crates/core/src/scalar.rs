//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real floating point scalar: `f32` or `f64`.
///
/// Tolerances throughout the crate are written for `f64`. [`Real::tol`]
/// rescales such a constant by the ratio of machine epsilons, so the same
/// code path stays meaningful at lower precision.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// An `f64` tolerance rescaled to this type's precision.
    fn tol(x: f64) -> Self {
        let ratio = Self::epsilon().to_f64().unwrap_or(f64::EPSILON) / f64::EPSILON;
        Self::lit(x * ratio.max(1.0))
    }

    /// Lossy conversion used for diagnostics and error payloads.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_scales_with_precision() {
        assert_eq!(<f64 as Real>::tol(1e-12), 1e-12);
        let t32 = <f32 as Real>::tol(1e-12);
        assert!(t32 > 1e-5 && t32 < 1e-3, "{t32}");
    }
}
