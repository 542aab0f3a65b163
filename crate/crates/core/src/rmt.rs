//! Scalar random-matrix functionals of the ridge resolvent.
//!
//! Two families live here:
//!
//! * sample-based kernels `v̂(η,0)`, `v̂₁′(η,0)`, `v̂₂′(η,0)` computed from the
//!   spectrum of `S_n`; these drive the bona fide estimator;
//! * oracle deterministic equivalents `v(η,0)`, `v₁′(η,0)`, `v₂′(η,0)` that
//!   need the population covariance `Σ`; these exist for validation and
//!   simulation only.
//!
//! All trace functionals are evaluated on eigenvalues, so one symmetric
//! eigendecomposition per matrix is enough.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Result, ShrinkError};
use crate::linalg::SymSpectrum;
use crate::portfolio::{CovarianceEstimate, CovarianceKind};
use crate::scalar::Scalar;

/// Sample-based kernel values for one `(η, S_n)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RmtFunctionals<T> {
    pub eta: T,
    pub c: T,
    pub v_hat: T,
    pub v1_prime_hat: T,
    pub v2_prime_hat: T,
    /// `(1/p) tr((S_n + ηI)⁻¹)`
    pub t1: T,
    /// `(1/p) tr((S_n + ηI)⁻²)`
    pub t2: T,
}

/// Oracle kernel values for one `(η, Σ)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleFunctionals<T> {
    pub eta: T,
    pub c: T,
    pub v: T,
    pub v1_prime: T,
    pub v2_prime: T,
}

fn check_c<T: Scalar>(c: T) -> Result<()> {
    if !(c > T::zero()) || !c.is_finite() {
        return Err(ShrinkError::InvalidParameter(format!(
            "concentration c = {c} must be positive"
        )));
    }
    Ok(())
}

fn check_eta<T: Scalar>(eta: T) -> Result<()> {
    if !(eta >= T::zero()) || !eta.is_finite() {
        return Err(ShrinkError::InvalidParameter(format!(
            "eta = {eta} must be finite and non-negative"
        )));
    }
    Ok(())
}

/// Kernels from a sample covariance matrix (one eigendecomposition).
pub fn kernels_from_sample<T: Scalar>(
    s: &CovarianceEstimate<T>,
    eta: T,
    c: T,
) -> Result<RmtFunctionals<T>> {
    let spectrum = SymSpectrum::new(s.matrix());
    kernels_from_spectrum(&spectrum, eta, c)
}

/// Kernels from a precomputed spectrum of `S_n`.
pub fn kernels_from_spectrum<T: Scalar>(
    spectrum: &SymSpectrum<T>,
    eta: T,
    c: T,
) -> Result<RmtFunctionals<T>> {
    check_c(c)?;
    check_eta(eta)?;
    if eta == T::zero() {
        if c >= T::one() {
            return Err(ShrinkError::SingularCovariance(format!(
                "eta = 0 requires c < 1, got c = {c}"
            )));
        }
        if spectrum.min_eigenvalue() <= spectrum.rank_cutoff() {
            return Err(ShrinkError::SingularCovariance(
                "eta = 0 with a singular sample covariance".into(),
            ));
        }
    }
    let p = T::lit(spectrum.dim() as f64);
    let (mut t1, mut t2) = (T::zero(), T::zero());
    for &d in spectrum.eigenvalues.iter() {
        // Rounding can leave PSD eigenvalues at -1e-17.
        let r = T::one() / (d.max(T::zero()) + eta);
        t1 += r;
        t2 += r * r;
    }
    t1 /= p;
    t2 /= p;
    let v_hat = T::one() - c * (T::one() - eta * t1);
    if !(v_hat > T::zero()) {
        return Err(ShrinkError::KernelDegenerate(format!(
            "v_hat = {v_hat} is not positive (eta = {eta}, c = {c})"
        )));
    }
    let v1_prime_hat = v_hat * c * (t1 - eta * t2);
    let v2_prime_hat = T::one() - T::one() / v_hat + eta * v1_prime_hat / (v_hat * v_hat);
    Ok(RmtFunctionals {
        eta,
        c,
        v_hat,
        v1_prime_hat,
        v2_prime_hat,
        t1,
        t2,
    })
}

/// Right-hand side of the fixed-point equation and its derivative in `v`.
fn fixed_point_rhs<T: Scalar>(sigma: &DVector<T>, eta: T, c: T, v: T) -> (T, T) {
    let p = T::lit(sigma.len() as f64);
    let (mut tr, mut dtr) = (T::zero(), T::zero());
    for &s in sigma.iter() {
        let r = T::one() / (v * s + eta);
        tr += r;
        dtr += s * r * r;
    }
    let rhs = T::one() - c + c * eta * tr / p;
    let drhs = -c * eta * dtr / p;
    (rhs, drhs)
}

const MAX_ITER: usize = 500;

/// Solves `v = 1 − c(1 − (η/p) tr((vΣ + ηI)⁻¹))` given the eigenvalues of `Σ`.
///
/// Damped fixed-point iteration seeded at `max(1 − c, 0.5)` with step
/// `1/(1 − RHS′(v))`, falling back to bisection on `[1e-10, 1]` if an iterate
/// leaves that interval or the budget runs out. `g(v) = v − RHS(v)` is
/// increasing, so the positive root is unique.
pub fn oracle_v_from_eigenvalues<T: Scalar>(sigma: &DVector<T>, eta: T, c: T) -> Result<T> {
    check_c(c)?;
    check_eta(eta)?;
    if sigma.is_empty() || sigma.iter().any(|s| !(*s > T::zero())) {
        return Err(ShrinkError::InvalidParameter(
            "population covariance must be positive definite".into(),
        ));
    }
    if eta == T::zero() {
        return if c < T::one() {
            Ok(T::one() - c)
        } else {
            Err(ShrinkError::InvalidParameter(format!(
                "eta = 0 has no positive root for c = {c}"
            )))
        };
    }
    let tol = T::solver_tol();
    let lo0 = T::lit(1e-10);
    let hi0 = T::one();

    let mut v = (T::one() - c).max(T::lit(0.5));
    for _ in 0..MAX_ITER {
        let (rhs, drhs) = fixed_point_rhs(sigma, eta, c, v);
        let resid = v - rhs;
        if resid.abs() < tol {
            return Ok(v);
        }
        let step = T::one() / (T::one() - drhs);
        let next = v - step * resid;
        if !next.is_finite() || next < lo0 || next > hi0 {
            break;
        }
        v = next;
    }

    let (mut lo, mut hi) = (lo0, hi0);
    let g = |v: T| v - fixed_point_rhs(sigma, eta, c, v).0;
    if g(lo) > T::zero() || g(hi) < T::zero() {
        return Err(ShrinkError::ConvergenceFailure(
            "fixed-point residual does not change sign on [1e-10, 1]".into(),
        ));
    }
    for _ in 0..MAX_ITER {
        let mid = (lo + hi) * T::lit(0.5);
        let gm = g(mid);
        if gm.abs() < tol {
            return Ok(mid);
        }
        if gm < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= T::eps() * hi {
            let mid = (lo + hi) * T::lit(0.5);
            if g(mid).abs() < tol {
                return Ok(mid);
            }
            break;
        }
    }
    Err(ShrinkError::ConvergenceFailure(format!(
        "no root within {MAX_ITER} iterations (eta = {eta}, c = {c})"
    )))
}

/// Oracle `v(η, 0)` for a known population covariance.
pub fn oracle_v<T: Scalar>(sigma: &CovarianceEstimate<T>, eta: T, c: T) -> Result<T> {
    let spectrum = SymSpectrum::new(sigma.matrix());
    oracle_v_from_eigenvalues(&spectrum.eigenvalues, eta, c)
}

/// `v₁′` from the trace ratio and `v₂′ = 1 − 1/v + ηv₁′/v²`.
pub fn oracle_derivatives_from_eigenvalues<T: Scalar>(
    sigma: &DVector<T>,
    eta: T,
    c: T,
    v: T,
) -> Result<OracleFunctionals<T>> {
    check_c(c)?;
    check_eta(eta)?;
    let p = T::lit(sigma.len() as f64);
    let (mut a1, mut a2) = (T::zero(), T::zero());
    for &s in sigma.iter() {
        let r = T::one() / (v * s + eta);
        a1 += r;
        a2 += r * r;
    }
    a1 /= p;
    a2 /= p;
    let num = c * a1 - c * eta * a2;
    let den = T::one() - c + T::lit(2.0) * c * eta * a1 - c * eta * eta * a2;
    if den.abs() < T::lit(1e-14) {
        return Err(ShrinkError::KernelDegenerate(format!(
            "derivative denominator {den} vanishes"
        )));
    }
    let v1_prime = v * num / den;
    let v2_prime = T::one() - T::one() / v + eta * v1_prime / (v * v);
    Ok(OracleFunctionals {
        eta,
        c,
        v,
        v1_prime,
        v2_prime,
    })
}

pub fn oracle_derivatives<T: Scalar>(
    sigma: &CovarianceEstimate<T>,
    eta: T,
    c: T,
    v: T,
) -> Result<OracleFunctionals<T>> {
    let spectrum = SymSpectrum::new(sigma.matrix());
    oracle_derivatives_from_eigenvalues(&spectrum.eigenvalues, eta, c, v)
}

/// Solves for `v` and evaluates both derivatives in one call.
pub fn oracle_functionals_from_eigenvalues<T: Scalar>(
    sigma: &DVector<T>,
    eta: T,
    c: T,
) -> Result<OracleFunctionals<T>> {
    let v = oracle_v_from_eigenvalues(sigma, eta, c)?;
    oracle_derivatives_from_eigenvalues(sigma, eta, c, v)
}

/// Deterministic equivalent `Ω_λ = vλΣ + (1 − λ)I`.
pub fn omega_lambda<T: Scalar>(
    sigma: &CovarianceEstimate<T>,
    lambda: T,
    v: T,
) -> Result<CovarianceEstimate<T>> {
    if !(lambda > T::zero() && lambda < T::one()) {
        return Err(ShrinkError::InvalidParameter(format!(
            "lambda = {lambda} outside (0, 1)"
        )));
    }
    if !(v > T::zero()) {
        return Err(ShrinkError::InvalidParameter(format!(
            "v = {v} must be positive"
        )));
    }
    let p = sigma.dim();
    let m = sigma.matrix() * (v * lambda) + nalgebra::DMatrix::identity(p, p) * (T::one() - lambda);
    let est = CovarianceEstimate::truth(m)?;
    debug_assert_eq!(est.kind(), CovarianceKind::True);
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn scaled_identity(p: usize, s: f64) -> CovarianceEstimate<f64> {
        CovarianceEstimate::truth(DMatrix::identity(p, p) * s).unwrap()
    }

    fn sample_identity(p: usize) -> CovarianceEstimate<f64> {
        CovarianceEstimate::sample(DMatrix::identity(p, p)).unwrap()
    }

    #[test]
    fn identity_kernels() {
        let k = kernels_from_sample(&sample_identity(4), 1.0, 0.5).unwrap();
        assert_relative_eq!(k.t1, 0.5, epsilon = 1e-15);
        assert_relative_eq!(k.t2, 0.25, epsilon = 1e-15);
        assert_relative_eq!(k.v_hat, 0.75, epsilon = 1e-15);
        assert_relative_eq!(k.v1_prime_hat, 0.09375, epsilon = 1e-15);
        assert_relative_eq!(k.v2_prime_hat, -1.0 / 6.0, epsilon = 1e-14);
    }

    #[test]
    fn eta_zero_kernel_is_one_minus_c() {
        let s = CovarianceEstimate::sample(DMatrix::from_diagonal(&DVector::from_row_slice(&[
            0.5, 2.0, 3.0,
        ])))
        .unwrap();
        let k = kernels_from_sample(&s, 0.0, 0.3).unwrap();
        assert_relative_eq!(k.v_hat, 0.7, epsilon = 1e-15);
    }

    #[test]
    fn eta_zero_rejects_singular_or_wide() {
        let s = CovarianceEstimate::sample(DMatrix::from_element(2, 2, 1.0)).unwrap();
        assert!(matches!(
            kernels_from_sample(&s, 0.0, 0.5),
            Err(ShrinkError::SingularCovariance(_))
        ));
        assert!(matches!(
            kernels_from_sample(&sample_identity(3), 0.0, 1.5),
            Err(ShrinkError::SingularCovariance(_))
        ));
    }

    #[test]
    fn degenerate_v_hat() {
        // A full-rank spectrum is impossible for c > 1; with tiny η it gives v̂ < 0.
        let s = CovarianceEstimate::sample(DMatrix::<f64>::identity(3, 3)).unwrap();
        assert!(matches!(
            kernels_from_sample(&s, 1e-3, 3.0),
            Err(ShrinkError::KernelDegenerate(_))
        ));
    }

    #[test]
    fn oracle_identity_closed_form() {
        let v = oracle_v(&scaled_identity(5, 1.0), 1.0, 0.5).unwrap();
        let expected = (-0.5 + 4.25f64.sqrt()) / 2.0;
        assert_relative_eq!(v, expected, epsilon = 1e-14);
    }

    #[test]
    fn oracle_two_identity_closed_form() {
        // v = 0.5 + 0.5/(2v + 1)  ⇔  2v² = 1
        let v = oracle_v(&scaled_identity(5, 2.0), 1.0, 0.5).unwrap();
        assert_relative_eq!(v, 0.5f64.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn oracle_limits() {
        let sigma = DVector::<f64>::from_row_slice(&[0.3, 1.0, 4.0]);
        let v = oracle_v_from_eigenvalues(&sigma, 1e-9, 0.4).unwrap();
        assert_relative_eq!(v, 0.6, epsilon = 1e-6);
        let f = oracle_functionals_from_eigenvalues(&sigma, 0.7, 1e-9).unwrap();
        assert_relative_eq!(f.v, 1.0, epsilon = 1e-8);
        assert!(f.v1_prime.abs() < 1e-8);
        assert!(f.v2_prime.abs() < 1e-8);
    }

    #[test]
    fn oracle_identity_derivative_values() {
        let v = (-0.5 + 4.25f64.sqrt()) / 2.0;
        let f = oracle_derivatives(&scaled_identity(3, 1.0), 1.0, 0.5, v).unwrap();
        let (a1, a2) = (1.0 / (v + 1.0), 1.0 / (v + 1.0).powi(2));
        let v1 = v * (0.5 * a1 - 0.5 * a2) / (0.5 + a1 - 0.5 * a2);
        assert_relative_eq!(f.v1_prime, v1, epsilon = 1e-15);
        assert_relative_eq!(f.v2_prime, 1.0 - 1.0 / v + v1 / (v * v), epsilon = 1e-15);
    }

    #[test]
    fn omega_cases() {
        let sigma = CovarianceEstimate::truth(DMatrix::from_diagonal(&DVector::from_row_slice(&[
            1.0, 2.0,
        ])))
        .unwrap();
        let om = omega_lambda(&sigma, 0.5, 0.8).unwrap();
        assert_relative_eq!(om.matrix()[(0, 0)], 0.9, epsilon = 1e-15);
        assert_relative_eq!(om.matrix()[(1, 1)], 1.3, epsilon = 1e-15);
        let id = omega_lambda(&scaled_identity(3, 1.0), 0.25, 0.6).unwrap();
        assert_relative_eq!(id.matrix()[(2, 2)], 0.6 * 0.25 + 0.75, epsilon = 1e-15);
        assert!(omega_lambda(&sigma, 1.0, 0.8).is_err());
    }

    #[test]
    fn oracle_f32_converges() {
        let sigma = DVector::from_row_slice(&[1.0f32, 1.0, 1.0]);
        let v = oracle_v_from_eigenvalues(&sigma, 1.0, 0.5).unwrap();
        assert!((v - 0.780_776).abs() < 1e-5);
    }
}
