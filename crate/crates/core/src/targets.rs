//! Target portfolios and the benchmark strategies compared against the
//! double shrinkage estimator.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Result, ShrinkError};
use crate::estimator::{FitOptions, ShrinkageProblem};
use crate::portfolio::{
    sample_covariance, traditional_gmv, CovarianceEstimate, PortfolioWeights, ReturnPanel,
};
use crate::scalar::Scalar;

/// How the shrinkage target `b` is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum TargetSpec<T: Scalar> {
    EquallyWeighted,
    /// Constant-correlation covariance estimated from the same window.
    EqualCorrelation,
    Custom(PortfolioWeights<T>),
}

impl<T: Scalar> TargetSpec<T> {
    pub fn short_name(&self) -> &'static str {
        match self {
            TargetSpec::EquallyWeighted => "ew",
            TargetSpec::EqualCorrelation => "ec",
            TargetSpec::Custom(_) => "custom",
        }
    }

    pub fn resolve(&self, s: &CovarianceEstimate<T>) -> Result<PortfolioWeights<T>> {
        match self {
            TargetSpec::EquallyWeighted => Ok(equally_weighted(s.dim())),
            TargetSpec::EqualCorrelation => equal_correlation_target(s),
            TargetSpec::Custom(w) if w.len() == s.dim() => Ok(w.clone()),
            TargetSpec::Custom(w) => Err(ShrinkError::InvalidData(format!(
                "custom target has {} weights for {} assets",
                w.len(),
                s.dim()
            ))),
        }
    }
}

/// `b = (1/p)1`.
pub fn equally_weighted<T: Scalar>(p: usize) -> PortfolioWeights<T> {
    let w = DVector::from_element(p, T::one() / T::lit(p as f64));
    PortfolioWeights::new(w, "ew").expect("equal weights sum to one")
}

const CORR_MARGIN: f64 = 1e-6;

/// GMV weights of the constant-correlation matrix `D^{1/2} R(ρ̄) D^{1/2}`,
/// where `D = diag(S)` and `ρ̄` is the mean off-diagonal sample correlation.
///
/// `ρ̄` is clipped into `(−1/(p−1), 1)` so the matrix stays positive definite,
/// and the inverse uses the closed form
/// `R⁻¹ = (I − ρ/(1 + (p−1)ρ) 11ᵀ) / (1 − ρ)`.
pub fn equal_correlation_target<T: Scalar>(
    s: &CovarianceEstimate<T>,
) -> Result<PortfolioWeights<T>> {
    let p = s.dim();
    let m = s.matrix();
    let mut inv_sd = DVector::zeros(p);
    for i in 0..p {
        let v = m[(i, i)];
        if !(v > T::zero()) {
            return Err(ShrinkError::InvalidData(format!(
                "variance of asset {i} is {v}, must be positive"
            )));
        }
        inv_sd[i] = T::one() / v.sqrt();
    }
    let rho = mean_correlation(m, &inv_sd);
    let pf = T::lit(p as f64);
    let lower = -T::one() / (pf - T::one()) + T::lit(CORR_MARGIN);
    let upper = T::one() - T::lit(CORR_MARGIN);
    let rho = rho.max(lower).min(upper);

    let total = inv_sd.sum();
    let k = rho / (T::one() + (pf - T::one()) * rho);
    // D^{-1/2} R⁻¹ D^{-1/2} 1 up to the positive factor 1/(1 − ρ).
    let raw = inv_sd.map(|x| x * (x - k * total));
    PortfolioWeights::normalized(raw, "ec")
}

fn mean_correlation<T: Scalar>(m: &nalgebra::DMatrix<T>, inv_sd: &DVector<T>) -> T {
    let p = m.nrows();
    let mut acc = T::zero();
    for i in 0..p {
        for j in (i + 1)..p {
            acc += m[(i, j)] * inv_sd[i] * inv_sd[j];
        }
    }
    acc / T::lit((p * (p - 1) / 2) as f64)
}

/// Portfolio construction rules compared in the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum StrategyKind {
    /// Sample GMV (pseudoinverse when `S_n` is singular).
    Traditional,
    /// The target portfolio itself.
    Target,
    /// Ridge plus weight shrinkage with bona fide `(λ*, ψ*)`.
    Double,
    /// Weight shrinkage only: the double estimator pinned at `λ = 1`
    /// (requires `c < 1`).
    Bps,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategySpec<T: Scalar> {
    pub kind: StrategyKind,
    pub target: TargetSpec<T>,
}

impl<T: Scalar> StrategySpec<T> {
    pub fn new(kind: StrategyKind, target: TargetSpec<T>) -> Self {
        Self { kind, target }
    }

    pub fn label(&self) -> String {
        match self.kind {
            StrategyKind::Traditional => "Traditional".into(),
            StrategyKind::Target => self.target.short_name().into(),
            StrategyKind::Double => format!("Double-{}", self.target.short_name()),
            StrategyKind::Bps => format!("BPS-{}", self.target.short_name()),
        }
    }
}

/// Weights produced by one strategy on one window.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyFit<T: Scalar> {
    pub weights: PortfolioWeights<T>,
    pub lambda_star: Option<T>,
    pub psi_star: Option<T>,
}

/// Fits `spec` on a sample covariance with concentration `c`.
pub fn fit_strategy_on<T: Scalar>(
    spec: &StrategySpec<T>,
    s: &CovarianceEstimate<T>,
    c: T,
    opts: &FitOptions,
) -> Result<StrategyFit<T>> {
    let label = spec.label();
    match spec.kind {
        StrategyKind::Traditional => Ok(StrategyFit {
            weights: traditional_gmv(s)?.with_label(label),
            lambda_star: None,
            psi_star: None,
        }),
        StrategyKind::Target => Ok(StrategyFit {
            weights: spec.target.resolve(s)?.with_label(label),
            lambda_star: None,
            psi_star: None,
        }),
        StrategyKind::Double | StrategyKind::Bps => {
            let b = spec.target.resolve(s)?;
            let problem = ShrinkageProblem::new(s.clone(), b, c)?;
            let sol = if spec.kind == StrategyKind::Double {
                problem.optimize(opts)?
            } else {
                if c >= T::one() {
                    return Err(ShrinkError::InvalidParameter(
                        "weight-only shrinkage at lambda = 1 requires c < 1".into(),
                    ));
                }
                problem.solve_at(T::one(), opts.clamp_psi)?
            };
            Ok(StrategyFit {
                weights: sol.final_weights.with_label(label),
                lambda_star: Some(sol.lambda_star),
                psi_star: Some(sol.psi_star),
            })
        }
    }
}

/// Fits `spec` on a return panel.
pub fn fit_strategy<T: Scalar>(
    spec: &StrategySpec<T>,
    panel: &ReturnPanel<T>,
    opts: &FitOptions,
) -> Result<StrategyFit<T>> {
    fit_strategy_on(spec, &sample_covariance(panel), panel.concentration(), opts)
}

/// Result of [`benchmark_suite`].
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkSuite<T: Scalar> {
    pub entries: Vec<(String, PortfolioWeights<T>)>,
    /// Strategies left out, with the reason.
    pub omitted: Vec<(String, String)>,
}

/// Traditional, target-only, double and (for `c < 1`) weight-only shrinkage
/// portfolios fitted to the same panel.
pub fn benchmark_suite<T: Scalar>(
    panel: &ReturnPanel<T>,
    b: &PortfolioWeights<T>,
) -> Result<BenchmarkSuite<T>> {
    let s = sample_covariance(panel);
    let c = panel.concentration();
    let opts = FitOptions::default();
    let target = TargetSpec::Custom(b.clone());
    let mut entries = vec![
        ("Traditional".to_string(), traditional_gmv(&s)?),
        ("Target".to_string(), b.clone().with_label("Target")),
    ];
    let double = fit_strategy_on(
        &StrategySpec::new(StrategyKind::Double, target.clone()),
        &s,
        c,
        &opts,
    )?;
    entries.push(("Double".into(), double.weights.with_label("Double")));
    let mut omitted = Vec::new();
    if c < T::one() {
        let bps = fit_strategy_on(&StrategySpec::new(StrategyKind::Bps, target), &s, c, &opts)?;
        entries.push(("BPS".into(), bps.weights.with_label("BPS")));
    } else {
        omitted.push(("BPS".into(), format!("requires c < 1, got c = {c}")));
    }
    Ok(BenchmarkSuite { entries, omitted })
}
