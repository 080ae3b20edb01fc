//! Scalar abstraction for the math core.

use std::fmt;

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar the EET math is generic over.
///
/// Implemented for `f32` and `f64`. The associated tolerances scale with the
/// precision of the type; all documented guarantees are stated for `f64`.
pub trait Scalar:
    Float + FromPrimitive + fmt::Debug + fmt::Display + Send + Sync + 'static
{
    /// Absolute slack accepted when validating that a set of weights sums to one.
    const UNIT_SUM_TOL: Self;
    /// Relative slack for internal algebraic cross-checks.
    const IDENTITY_RTOL: Self;

    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).unwrap_or_else(|| {
            // usize counts in this crate are matrix dimensions and task
            // counts; they always fit a float mantissa in practice.
            Self::from_f64(v as f64).unwrap()
        })
    }
}

impl Scalar for f64 {
    const UNIT_SUM_TOL: Self = 1e-12;
    const IDENTITY_RTOL: Self = 1e-9;
}

impl Scalar for f32 {
    const UNIT_SUM_TOL: Self = 1e-5;
    const IDENTITY_RTOL: Self = 1e-4;
}

/// Relative closeness at tolerance `rtol`, with an absolute fallback near zero.
pub(crate) fn approx_eq<S: Scalar>(a: S, b: S, rtol: S) -> bool {
    let scale = a.abs().max(b.abs());
    if scale == S::zero() {
        return true;
    }
    (a - b).abs() <= rtol * scale
}
