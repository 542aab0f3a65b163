//! Scalar abstraction shared by the numerical modules.
//!
//! Everything that touches a matrix is written against [`Scalar`] so the
//! same code runs in `f64` (the default, used for all reported numbers) and
//! `f32`.

use nalgebra::RealField;
use num_traits::ToPrimitive;

/// Real floating-point type usable by the estimator.
pub trait Scalar: RealField + Copy + ToPrimitive {
    /// Converts an `f64` literal into this scalar type.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal must be representable")
    }

    /// Converts back to `f64` for reporting.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Machine epsilon.
    fn eps() -> Self {
        Self::default_epsilon()
    }

    /// Tolerance for `sum(w) = 1` checks: 1e-10 in `f64`, widened to the
    /// precision floor of narrower types.
    fn weight_sum_tol() -> Self {
        Self::lit(1e-10).max(Self::eps() * Self::lit(1e4))
    }

    /// Tolerance floor for scalar root finding.
    fn solver_tol() -> Self {
        Self::lit(1e-12).max(Self::eps() * Self::lit(16.0))
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
