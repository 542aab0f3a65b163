//! Return panels, sample covariance, ridge blending and the closed-form
//! minimum-variance weight formulas.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Result, ShrinkError};
use crate::linalg::{self, SpdFactor, SymSpectrum};
use crate::scalar::Scalar;

/// A `p × n` panel of returns: rows are assets, columns are dates.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnPanel<T: Scalar> {
    values: DMatrix<T>,
    asset_labels: Vec<String>,
    time_labels: Vec<String>,
}

impl<T: Scalar> ReturnPanel<T> {
    pub const MIN_ASSETS: usize = 2;
    pub const MIN_PERIODS: usize = 3;

    /// Builds a panel; `time_labels` defaults to `0..n`.
    pub fn new(
        values: DMatrix<T>,
        asset_labels: Vec<String>,
        time_labels: Option<Vec<String>>,
    ) -> Result<Self> {
        let (p, n) = values.shape();
        if p < Self::MIN_ASSETS || n < Self::MIN_PERIODS {
            return Err(ShrinkError::InvalidData(format!(
                "panel must have at least {} assets and {} periods, got {p}x{n}",
                Self::MIN_ASSETS,
                Self::MIN_PERIODS
            )));
        }
        if let Some((idx, _)) = values.iter().enumerate().find(|(_, x)| !x.is_finite()) {
            return Err(ShrinkError::InvalidData(format!(
                "non-finite value at asset {}, period {}",
                idx % p,
                idx / p
            )));
        }
        if asset_labels.len() != p {
            return Err(ShrinkError::InvalidData(format!(
                "{} asset labels for {p} assets",
                asset_labels.len()
            )));
        }
        let time_labels = time_labels.unwrap_or_else(|| (0..n).map(|t| t.to_string()).collect());
        if time_labels.len() != n {
            return Err(ShrinkError::InvalidData(format!(
                "{} time labels for {n} periods",
                time_labels.len()
            )));
        }
        Ok(Self {
            values,
            asset_labels,
            time_labels,
        })
    }

    /// Panel with synthetic labels `A0, A1, …`.
    pub fn from_matrix(values: DMatrix<T>) -> Result<Self> {
        let labels = (0..values.nrows()).map(|i| format!("A{i}")).collect();
        Self::new(values, labels, None)
    }

    pub fn values(&self) -> &DMatrix<T> {
        &self.values
    }

    pub fn asset_labels(&self) -> &[String] {
        &self.asset_labels
    }

    pub fn time_labels(&self) -> &[String] {
        &self.time_labels
    }

    pub fn assets(&self) -> usize {
        self.values.nrows()
    }

    pub fn periods(&self) -> usize {
        self.values.ncols()
    }

    /// Concentration ratio `c = p / n`.
    pub fn concentration(&self) -> T {
        T::lit(self.assets() as f64 / self.periods() as f64)
    }

    /// Sub-panel of `len` consecutive periods starting at `start`.
    pub fn window(&self, start: usize, len: usize) -> Result<Self> {
        if start + len > self.periods() {
            return Err(ShrinkError::InvalidParameter(format!(
                "window {start}..{} exceeds {} periods",
                start + len,
                self.periods()
            )));
        }
        Self::new(
            self.values.columns(start, len).into_owned(),
            self.asset_labels.clone(),
            Some(self.time_labels[start..start + len].to_vec()),
        )
    }
}

/// Which estimator produced a covariance matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum CovarianceKind<T> {
    Sample,
    Ridge { lambda: T },
    True,
}

/// A symmetric `p × p` covariance matrix tagged with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceEstimate<T: Scalar> {
    matrix: DMatrix<T>,
    kind: CovarianceKind<T>,
}

impl<T: Scalar> CovarianceEstimate<T> {
    fn checked(matrix: DMatrix<T>, kind: CovarianceKind<T>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(ShrinkError::InvalidData(format!(
                "covariance must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(ShrinkError::InvalidData(
                "non-finite covariance entry".into(),
            ));
        }
        if linalg::asymmetry(&matrix) > T::lit(1e-12).max(T::eps() * T::lit(64.0)) {
            return Err(ShrinkError::InvalidData(
                "covariance is not symmetric".into(),
            ));
        }
        Ok(Self { matrix, kind })
    }

    /// Wraps an externally computed sample covariance.
    pub fn sample(matrix: DMatrix<T>) -> Result<Self> {
        Self::checked(matrix, CovarianceKind::Sample)
    }

    /// Wraps a known population covariance; it must be positive definite.
    pub fn truth(matrix: DMatrix<T>) -> Result<Self> {
        let est = Self::checked(matrix, CovarianceKind::True)?;
        SpdFactor::new(&est.matrix).map_err(|_| {
            ShrinkError::InvalidData("true covariance must be positive definite".into())
        })?;
        Ok(est)
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.matrix
    }

    pub fn kind(&self) -> CovarianceKind<T> {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn into_matrix(self) -> DMatrix<T> {
        self.matrix
    }
}

/// Portfolio weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioWeights<T: Scalar> {
    weights: DVector<T>,
    label: String,
}

impl<T: Scalar> PortfolioWeights<T> {
    pub fn new(weights: DVector<T>, label: impl Into<String>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|w| !w.is_finite()) {
            return Err(ShrinkError::InvalidData(
                "weights must be non-empty and finite".into(),
            ));
        }
        let sum = weights.sum();
        if (sum - T::one()).abs() > T::weight_sum_tol() {
            return Err(ShrinkError::InvalidData(format!(
                "weights sum to {sum}, expected 1"
            )));
        }
        Ok(Self {
            weights,
            label: label.into(),
        })
    }

    /// `x / 1ᵀx`, failing when the normalizer vanishes.
    pub fn normalized(x: DVector<T>, label: impl Into<String>) -> Result<Self> {
        let total = x.sum();
        let scale = x.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        if !total.is_finite() || total.abs() <= T::eps() * T::lit(x.len() as f64) * scale {
            return Err(ShrinkError::DegenerateSolution(format!(
                "normalizer 1ᵀx = {total} is numerically zero"
            )));
        }
        Self::new(x / total, label)
    }

    pub fn as_vector(&self) -> &DVector<T> {
        &self.weights
    }

    pub fn into_vector(self) -> DVector<T> {
        self.weights
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Portfolio variance `wᵀAw`.
    pub fn variance(&self, cov: &DMatrix<T>) -> T {
        self.weights.dot(&(cov * &self.weights))
    }
}

/// Centered sample covariance of the columns of `values` with divisor `n`
/// (not `n − 1`).
pub fn sample_covariance_matrix<T: Scalar>(values: &DMatrix<T>) -> DMatrix<T> {
    let n = values.ncols();
    let inv_n = T::one() / T::lit(n as f64);
    let mean = values.column_sum() * inv_n;
    let mut centered = values.clone();
    for mut col in centered.column_iter_mut() {
        col -= &mean;
    }
    let mut s = (&centered * centered.transpose()) * inv_n;
    linalg::symmetrize_in_place(&mut s);
    s
}

/// `S_n = (1/n)(Y − ȳ1ᵀ)(Y − ȳ1ᵀ)ᵀ`.
///
/// The divisor is `n`. Most statistics packages default to `n − 1`; the
/// random-matrix kernels downstream are calibrated to `n`.
pub fn sample_covariance<T: Scalar>(panel: &ReturnPanel<T>) -> CovarianceEstimate<T> {
    CovarianceEstimate {
        matrix: sample_covariance_matrix(panel.values()),
        kind: CovarianceKind::Sample,
    }
}

/// `S_λ = λS + (1 − λ)I`.
pub fn ridge_blend<T: Scalar>(
    s: &CovarianceEstimate<T>,
    lambda: T,
) -> Result<CovarianceEstimate<T>> {
    if s.kind != CovarianceKind::Sample {
        return Err(ShrinkError::InvalidParameter(
            "ridge blend expects a sample covariance".into(),
        ));
    }
    if !(lambda > T::zero() && lambda <= T::one()) {
        return Err(ShrinkError::InvalidParameter(format!(
            "lambda = {lambda} outside (0, 1]"
        )));
    }
    let p = s.dim();
    let matrix = &s.matrix * lambda + DMatrix::identity(p, p) * (T::one() - lambda);
    Ok(CovarianceEstimate {
        matrix,
        kind: CovarianceKind::Ridge { lambda },
    })
}

/// Minimum-variance weights `A⁻¹1 / 1ᵀA⁻¹1` through a Cholesky solve.
pub fn gmv_weights<T: Scalar>(cov: &DMatrix<T>, label: &str) -> Result<PortfolioWeights<T>> {
    let factor = SpdFactor::new(cov)?;
    PortfolioWeights::normalized(factor.solve(&linalg::ones(cov.nrows())), label)
}

/// Tikhonov-regularized weights `S_λ⁻¹1 / 1ᵀS_λ⁻¹1`.
pub fn tikhonov_weights<T: Scalar>(
    s_lambda: &CovarianceEstimate<T>,
) -> Result<PortfolioWeights<T>> {
    gmv_weights(&s_lambda.matrix, "Ridge")
}

/// Sample GMV weights `S⁺1 / 1ᵀS⁺1`, switching to the Moore–Penrose
/// pseudoinverse when `S` is numerically rank deficient.
pub fn traditional_gmv<T: Scalar>(s: &CovarianceEstimate<T>) -> Result<PortfolioWeights<T>> {
    let p = s.dim();
    let spectrum = SymSpectrum::new(&s.matrix);
    if spectrum.numerical_rank() == p {
        if let Ok(w) = gmv_weights(&s.matrix, "Traditional") {
            return Ok(w);
        }
    }
    let pinv = spectrum.pseudo_inverse();
    PortfolioWeights::normalized(pinv * linalg::ones::<T>(p), "Traditional")
}

/// `ψw + (1 − ψ)b`.
pub fn combine_weights<T: Scalar>(
    w: &PortfolioWeights<T>,
    b: &PortfolioWeights<T>,
    psi: T,
) -> PortfolioWeights<T> {
    assert_eq!(w.len(), b.len(), "weight vectors differ in length");
    PortfolioWeights {
        weights: &w.weights * psi + &b.weights * (T::one() - psi),
        label: "Double".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn diag(d: &[f64]) -> CovarianceEstimate<f64> {
        CovarianceEstimate::sample(DMatrix::from_diagonal(&DVector::from_row_slice(d))).unwrap()
    }

    #[test]
    fn constant_columns_give_zero_covariance() {
        let y = DMatrix::from_fn(3, 5, |i, _| i as f64 + 0.5);
        let s = sample_covariance(&ReturnPanel::from_matrix(y).unwrap());
        assert!(s.matrix().iter().all(|x| *x == 0.0));
    }

    #[test]
    fn two_by_two_hand_example() {
        let y = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, 2.0, 0.0]);
        let s = sample_covariance_matrix(&y);
        assert_relative_eq!(s, DMatrix::from_element(2, 2, 1.0), epsilon = 1e-15);
    }

    #[test]
    fn panel_rejects_short_and_non_finite() {
        assert!(ReturnPanel::from_matrix(DMatrix::<f64>::zeros(2, 2)).is_err());
        assert!(ReturnPanel::from_matrix(DMatrix::<f64>::zeros(1, 5)).is_err());
        let mut y = DMatrix::<f64>::zeros(2, 4);
        y[(1, 2)] = f64::NAN;
        assert!(matches!(
            ReturnPanel::from_matrix(y),
            Err(ShrinkError::InvalidData(_))
        ));
    }

    #[test]
    fn ridge_blend_cases() {
        let s = diag(&[2.0, 0.0]);
        let half = ridge_blend(&s, 0.5).unwrap();
        assert_relative_eq!(half.matrix()[(0, 0)], 1.5);
        assert_relative_eq!(half.matrix()[(1, 1)], 0.5);
        assert_eq!(ridge_blend(&s, 1.0).unwrap().matrix(), s.matrix());
        let id = diag(&[1.0, 1.0, 1.0]);
        assert_relative_eq!(
            *ridge_blend(&id, 0.3).unwrap().matrix(),
            *id.matrix(),
            epsilon = 1e-15
        );
        for bad in [0.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(
                ridge_blend(&s, bad),
                Err(ShrinkError::InvalidParameter(_))
            ));
        }
    }

    #[test]
    fn tikhonov_and_traditional_inverse_variance() {
        let s = diag(&[1.0, 4.0]);
        let ridge = ridge_blend(&s, 1.0).unwrap();
        let w = tikhonov_weights(&ridge).unwrap();
        assert_relative_eq!(w.as_vector()[0], 0.8, epsilon = 1e-15);
        assert_relative_eq!(w.as_vector()[1], 0.2, epsilon = 1e-15);
        let t = traditional_gmv(&s).unwrap();
        assert_relative_eq!(t.as_vector()[0], 0.8, epsilon = 1e-15);
        let eq = tikhonov_weights(&ridge_blend(&diag(&[1.0; 4]), 0.4).unwrap()).unwrap();
        assert!(eq.as_vector().iter().all(|w| (w - 0.25).abs() < 1e-15));
    }

    #[test]
    fn tikhonov_singular_at_lambda_one() {
        let s = CovarianceEstimate::sample(DMatrix::from_element(2, 2, 1.0)).unwrap();
        let ridge = ridge_blend(&s, 1.0).unwrap();
        assert!(matches!(
            tikhonov_weights(&ridge),
            Err(ShrinkError::SingularCovariance(_))
        ));
    }

    #[test]
    fn traditional_uses_pseudoinverse_for_rank_one() {
        let s = CovarianceEstimate::sample(DMatrix::from_element(2, 2, 1.0)).unwrap();
        let w = traditional_gmv(&s).unwrap();
        assert_relative_eq!(w.as_vector()[0], 0.5, epsilon = 1e-14);
        assert_relative_eq!(w.as_vector()[1], 0.5, epsilon = 1e-14);
    }

    #[test]
    fn traditional_degenerate_when_pinv_annihilates_ones() {
        // S = vvᵀ with v ⟂ 1, so S⁺1 = 0.
        let s = CovarianceEstimate::sample(DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]))
            .unwrap();
        assert!(matches!(
            traditional_gmv(&s),
            Err(ShrinkError::DegenerateSolution(_))
        ));
    }

    #[test]
    fn combine_corners() {
        let w = PortfolioWeights::new(DVector::from_row_slice(&[1.0, 0.0]), "w").unwrap();
        let b = PortfolioWeights::new(DVector::from_row_slice(&[0.0, 1.0]), "b").unwrap();
        assert_eq!(combine_weights(&w, &b, 1.0).as_vector(), w.as_vector());
        assert_eq!(combine_weights(&w, &b, 0.0).as_vector(), b.as_vector());
        let mid = combine_weights(&w, &b, 0.5);
        assert_eq!(mid.as_vector().as_slice(), &[0.5, 0.5]);
    }

    #[test]
    fn weights_reject_bad_sum() {
        assert!(PortfolioWeights::new(DVector::from_row_slice(&[0.5, 0.6]), "x").is_err());
    }

    #[test]
    fn single_precision_path() {
        let s =
            CovarianceEstimate::<f32>::sample(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 4.0]))
                .unwrap();
        let w = tikhonov_weights(&ridge_blend(&s, 0.5).unwrap()).unwrap();
        // diag(1, 2.5) → (2.5, 1)/3.5
        assert!((w.as_vector()[0] - 2.5 / 3.5).abs() < 1e-6);
    }
}
