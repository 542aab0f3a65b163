//! Data-generating processes for the simulation study and the Monte Carlo
//! relative-loss experiment.
//!
//! Every random draw comes from a ChaCha stream seeded by
//! [`derive_seed`], so a `(config, seed)` pair reproduces the same panels
//! bit for bit regardless of thread count.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, ShrinkError};
use crate::estimator::FitOptions;
use crate::linalg::{self, SpdFactor, SymSpectrum};
use crate::portfolio::{CovarianceEstimate, PortfolioWeights, ReturnPanel};
use crate::targets::{fit_strategy, StrategySpec};

/// Data-generating scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Scenario {
    /// i.i.d. t(5) innovations scaled to unit variance.
    T5,
    /// One Gaussian market factor plus Gaussian idiosyncratic noise.
    Capm,
    /// Constant-conditional-correlation GARCH(1,1).
    CccGarch,
    /// Diagonal VAR(1).
    Var1,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::T5 => "t5",
            Scenario::Capm => "capm",
            Scenario::CccGarch => "ccc",
            Scenario::Var1 => "var1",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = ShrinkError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "t5" | "t" => Ok(Scenario::T5),
            "capm" => Ok(Scenario::Capm),
            "ccc" | "ccc-garch" | "garch" => Ok(Scenario::CccGarch),
            "var1" | "var" => Ok(Scenario::Var1),
            other => Err(ShrinkError::InvalidParameter(format!(
                "unknown scenario `{other}`"
            ))),
        }
    }
}

pub const DEFAULT_BURN_IN: usize = 500;
pub const DEFAULT_REPLICATIONS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub p: usize,
    pub n: usize,
    pub seed: u64,
    pub replications: usize,
    /// Discarded warm-up periods for the GARCH and VAR scenarios.
    pub burn_in: usize,
}

impl ScenarioConfig {
    pub fn new(scenario: Scenario, p: usize, n: usize, seed: u64) -> Self {
        Self {
            scenario,
            p,
            n,
            seed,
            replications: DEFAULT_REPLICATIONS,
            burn_in: DEFAULT_BURN_IN,
        }
    }

    pub fn with_replications(mut self, replications: usize) -> Self {
        self.replications = replications;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.p < 2 || self.n < 3 || self.replications < 1 {
            return Err(ShrinkError::InvalidParameter(format!(
                "need p >= 2, n >= 3, replications >= 1 (got p = {}, n = {}, replications = {})",
                self.p, self.n, self.replications
            )));
        }
        Ok(())
    }

    pub fn concentration(&self) -> f64 {
        self.p as f64 / self.n as f64
    }
}

/// Scenario-specific model parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioParams {
    None,
    Capm {
        beta: DVector<f64>,
    },
    Ccc {
        alpha0: DVector<f64>,
        alpha1: DVector<f64>,
        beta1: DVector<f64>,
        correlation: DMatrix<f64>,
    },
    Var1 {
        gamma: DVector<f64>,
    },
}

/// Population parameters of one simulated market.
#[derive(Debug, Clone)]
pub struct TrueModel {
    pub mu: DVector<f64>,
    /// Innovation covariance `Σ`.
    pub sigma: CovarianceEstimate<f64>,
    /// Stationary covariance of `y_t`; the evaluator's covariance.
    pub unconditional_sigma: CovarianceEstimate<f64>,
    pub params: ScenarioParams,
    sigma_sqrt: DMatrix<f64>,
}

impl TrueModel {
    /// i.i.d. model `y_t = μ + Σ^{1/2} x_t`.
    pub fn iid(mu: DVector<f64>, sigma: CovarianceEstimate<f64>) -> Result<Self> {
        if mu.len() != sigma.dim() {
            return Err(ShrinkError::InvalidData(
                "mean and covariance sizes differ".into(),
            ));
        }
        let sigma_sqrt = SymSpectrum::new(sigma.matrix()).sqrt();
        Ok(Self {
            mu,
            unconditional_sigma: sigma.clone(),
            sigma,
            params: ScenarioParams::None,
            sigma_sqrt,
        })
    }

    /// Adds market betas; the evaluator covariance becomes `Σ + ββᵀ`.
    pub fn with_capm(mut self, beta: DVector<f64>) -> Result<Self> {
        if beta.len() != self.mu.len() {
            return Err(ShrinkError::InvalidData("beta has the wrong length".into()));
        }
        let total = self.sigma.matrix() + &beta * beta.transpose();
        self.unconditional_sigma = CovarianceEstimate::truth(total)?;
        self.params = ScenarioParams::Capm { beta };
        Ok(self)
    }

    /// Adds CCC-GARCH(1,1) dynamics whose stationary covariance is `Σ`.
    pub fn with_ccc(mut self, alpha1: DVector<f64>, beta1: DVector<f64>) -> Result<Self> {
        let p = self.mu.len();
        if alpha1.len() != p || beta1.len() != p {
            return Err(ShrinkError::InvalidData(
                "GARCH coefficients have the wrong length".into(),
            ));
        }
        for j in 0..p {
            if alpha1[j] < 0.0 || beta1[j] < 0.0 || alpha1[j] + beta1[j] >= 1.0 {
                return Err(ShrinkError::InvalidData(format!(
                    "GARCH coefficients of series {j} violate stationarity"
                )));
            }
        }
        let s = self.sigma.matrix();
        let correlation = DMatrix::from_fn(p, p, |i, j| s[(i, j)] / (s[(i, i)] * s[(j, j)]).sqrt());
        let alpha0 = DVector::from_fn(p, |j, _| s[(j, j)] * (1.0 - alpha1[j] - beta1[j]));
        self.params = ScenarioParams::Ccc {
            alpha0,
            alpha1,
            beta1,
            correlation,
        };
        Ok(self)
    }

    /// Adds diagonal VAR(1) dynamics `y_t − μ = Γ(y_{t−1} − μ) + Σ^{1/2} x_t`.
    pub fn with_var1(mut self, gamma: DVector<f64>) -> Result<Self> {
        if gamma.len() != self.mu.len() {
            return Err(ShrinkError::InvalidData(
                "gamma has the wrong length".into(),
            ));
        }
        if let Some(g) = gamma.iter().find(|g| !(g.abs() < 1.0)) {
            return Err(ShrinkError::InvalidData(format!(
                "VAR coefficient {g} is not inside (-1, 1)"
            )));
        }
        let v = var1_stationary_covariance(self.sigma.matrix(), &gamma);
        self.unconditional_sigma = CovarianceEstimate::truth(v)?;
        self.params = ScenarioParams::Var1 { gamma };
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    /// `Σ^{1/2}` (symmetric root).
    pub fn sigma_sqrt(&self) -> &DMatrix<f64> {
        &self.sigma_sqrt
    }

    /// Minimum-variance weights under the evaluator covariance.
    pub fn true_gmv(&self) -> Result<PortfolioWeights<f64>> {
        crate::portfolio::gmv_weights(self.unconditional_sigma.matrix(), "TrueGMV")
    }
}

/// Stationary covariance of a diagonal VAR(1): `V_ij = Σ_ij / (1 − γ_i γ_j)`.
pub fn var1_stationary_covariance(sigma: &DMatrix<f64>, gamma: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(sigma.nrows(), sigma.ncols(), |i, j| {
        sigma[(i, j)] / (1.0 - gamma[i] * gamma[j])
    })
}

/// SplitMix64 finalizer over `(base, stream, index)`.
pub fn derive_seed(base: u64, stream: u64, index: u64) -> u64 {
    let mut z = base
        ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03);
    for _ in 0..2 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const EIG_LOW: f64 = 0.1;
const EIG_HIGH: f64 = 10.0;

/// Random covariance `QΛQᵀ`: `Q` Haar-orthogonal (QR of a Gaussian matrix
/// with sign correction), eigenvalues log-uniform on `[0.1, 10]`.
pub fn random_covariance(p: usize, seed: u64) -> CovarianceEstimate<f64> {
    let mut rng = rng_from_seed(seed);
    let g = DMatrix::from_fn(p, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..p {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    let (lo, hi) = (EIG_LOW.ln(), EIG_HIGH.ln());
    let eig = DVector::from_fn(p, |_, _| rng.random_range(lo..=hi).exp());
    let scaled = DMatrix::from_fn(p, p, |i, j| q[(i, j)] * eig[j]);
    let mut sigma = scaled * q.transpose();
    linalg::symmetrize_in_place(&mut sigma);
    CovarianceEstimate::truth(sigma).expect("spectrum bounded below by 0.1")
}

/// Draws `μ`, `Σ` and the scenario parameters.
pub fn draw_model(scenario: Scenario, p: usize, seed: u64) -> Result<TrueModel> {
    let sigma = random_covariance(p, derive_seed(seed, 7, 0));
    let mut rng = rng_from_seed(derive_seed(seed, 7, 1));
    let mu = DVector::from_fn(p, |_, _| rng.random_range(-0.1..0.1));
    let model = TrueModel::iid(mu, sigma)?;
    match scenario {
        Scenario::T5 => Ok(model),
        Scenario::Capm => {
            let beta = DVector::from_fn(p, |_, _| rng.random_range(-1.0..1.0));
            model.with_capm(beta)
        }
        Scenario::CccGarch => {
            let a1 = DVector::from_fn(p, |_, _| rng.random_range(0.0..0.1));
            let b1 = DVector::from_fn(p, |_, _| rng.random_range(0.6..0.7));
            model.with_ccc(a1, b1)
        }
        Scenario::Var1 => {
            let gamma = DVector::from_fn(p, |_, _| rng.random_range(-0.9..0.9));
            model.with_var1(gamma)
        }
    }
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, p: usize, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(p, n, |_, _| rng.sample::<f64, _>(StandardNormal))
}

fn panel(values: DMatrix<f64>) -> Result<ReturnPanel<f64>> {
    ReturnPanel::from_matrix(values)
}

fn add_mean(mut y: DMatrix<f64>, mu: &DVector<f64>) -> DMatrix<f64> {
    for mut col in y.column_iter_mut() {
        col += mu;
    }
    y
}

/// Scenario 1: `Y = μ1ᵀ + Σ^{1/2}X` with `x_tj ~ t(5)/√(5/3)`.
pub fn gen_t5(model: &TrueModel, n: usize, seed: u64) -> Result<ReturnPanel<f64>> {
    let mut rng = rng_from_seed(seed);
    let t = StudentT::new(5.0).expect("valid degrees of freedom");
    let scale = (5.0f64 / 3.0).sqrt().recip();
    let x = DMatrix::from_fn(model.dim(), n, |_, _| t.sample(&mut rng) * scale);
    panel(add_mean(model.sigma_sqrt() * x, &model.mu))
}

/// Scenario 2: `y_t = μ + βz_t + Σ^{1/2}x_t` with Gaussian `z_t`, `x_t`.
pub fn gen_capm(model: &TrueModel, n: usize, seed: u64) -> Result<ReturnPanel<f64>> {
    let ScenarioParams::Capm { beta } = &model.params else {
        return Err(ShrinkError::InvalidData(
            "model has no CAPM parameters".into(),
        ));
    };
    let mut rng = rng_from_seed(seed);
    let x = gaussian_matrix(&mut rng, model.dim(), n);
    let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let y = model.sigma_sqrt() * x + beta * z.transpose();
    panel(add_mean(y, &model.mu))
}

/// Scenario 3: CCC-GARCH(1,1) with `h_{j,0} = Σ_jj`; the first `burn_in`
/// periods are dropped.
pub fn gen_ccc_garch(
    model: &TrueModel,
    n: usize,
    burn_in: usize,
    seed: u64,
) -> Result<ReturnPanel<f64>> {
    let ScenarioParams::Ccc {
        alpha0,
        alpha1,
        beta1,
        correlation,
    } = &model.params
    else {
        return Err(ShrinkError::InvalidData(
            "model has no GARCH parameters".into(),
        ));
    };
    let chol = nalgebra::Cholesky::new(correlation.clone()).ok_or_else(|| {
        ShrinkError::InvalidData("correlation matrix is not positive definite".into())
    })?;
    let l = chol.l();
    let p = model.dim();
    let mut rng = rng_from_seed(seed);
    let mut h = DVector::from_fn(p, |j, _| model.sigma.matrix()[(j, j)]);
    let mut y = DMatrix::zeros(p, n);
    for t in 0..burn_in + n {
        let z = &l * DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
        for j in 0..p {
            let e = h[j].sqrt() * z[j];
            if t >= burn_in {
                y[(j, t - burn_in)] = model.mu[j] + e;
            }
            h[j] = alpha0[j] + alpha1[j] * e * e + beta1[j] * h[j];
        }
    }
    panel(y)
}

/// Scenario 4: diagonal VAR(1) started at `μ`, first `burn_in` periods
/// dropped.
pub fn gen_var1(
    model: &TrueModel,
    n: usize,
    burn_in: usize,
    seed: u64,
) -> Result<ReturnPanel<f64>> {
    let ScenarioParams::Var1 { gamma } = &model.params else {
        return Err(ShrinkError::InvalidData(
            "model has no VAR parameters".into(),
        ));
    };
    let p = model.dim();
    let mut rng = rng_from_seed(seed);
    let mut dev = DVector::<f64>::zeros(p);
    let mut y = DMatrix::zeros(p, n);
    for t in 0..burn_in + n {
        let shock =
            model.sigma_sqrt() * DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
        dev = gamma.component_mul(&dev) + shock;
        if t >= burn_in {
            y.set_column(t - burn_in, &(&model.mu + &dev));
        }
    }
    panel(y)
}

/// Generates a panel according to `scenario`.
pub fn generate(
    scenario: Scenario,
    model: &TrueModel,
    n: usize,
    burn_in: usize,
    seed: u64,
) -> Result<ReturnPanel<f64>> {
    match scenario {
        Scenario::T5 => gen_t5(model, n, seed),
        Scenario::Capm => gen_capm(model, n, seed),
        Scenario::CccGarch => gen_ccc_garch(model, n, burn_in, seed),
        Scenario::Var1 => gen_var1(model, n, burn_in, seed),
    }
}

/// `V_w / V_GMV − 1` under covariance `sigma`.
pub fn relative_loss(sigma: &CovarianceEstimate<f64>, w: &PortfolioWeights<f64>) -> Result<f64> {
    let factor = SpdFactor::new(sigma.matrix())?;
    let ones = linalg::ones::<f64>(sigma.dim());
    let v_gmv = 1.0 / factor.quad(&ones, &ones);
    Ok(w.variance(sigma.matrix()) / v_gmv - 1.0)
}

/// One (replication, strategy) cell of the experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRow {
    pub scenario: Scenario,
    pub p: usize,
    pub n: usize,
    pub c: f64,
    pub strategy: String,
    pub relative_loss: Option<f64>,
    pub lambda_star: Option<f64>,
    pub psi_star: Option<f64>,
    pub replication: usize,
    pub error: Option<String>,
}

/// Distribution of relative losses for one strategy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategySummary {
    pub strategy: String,
    pub count: usize,
    pub failures: usize,
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub q05: Option<f64>,
    pub q25: Option<f64>,
    pub q75: Option<f64>,
    pub q95: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentTable {
    pub config: ScenarioConfig,
    pub rows: Vec<ExperimentRow>,
    pub summary: Vec<StrategySummary>,
}

impl ExperimentTable {
    /// Successful relative losses of `strategy`, in replication order.
    pub fn losses(&self, strategy: &str) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.strategy == strategy)
            .filter_map(|r| r.relative_loss)
            .collect()
    }

    pub fn summary_for(&self, strategy: &str) -> Option<&StrategySummary> {
        self.summary.iter().find(|s| s.strategy == strategy)
    }
}

/// Linear-interpolation quantile of sorted data (type 7).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Some(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

fn summarize(strategy: &str, rows: &[ExperimentRow]) -> StrategySummary {
    let mine: Vec<&ExperimentRow> = rows.iter().filter(|r| r.strategy == strategy).collect();
    let mut vals: Vec<f64> = mine.iter().filter_map(|r| r.relative_loss).collect();
    vals.sort_by(f64::total_cmp);
    let mean = (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64);
    StrategySummary {
        strategy: strategy.to_string(),
        count: vals.len(),
        failures: mine.len() - vals.len(),
        mean,
        median: quantile_sorted(&vals, 0.5),
        q05: quantile_sorted(&vals, 0.05),
        q25: quantile_sorted(&vals, 0.25),
        q75: quantile_sorted(&vals, 0.75),
        q95: quantile_sorted(&vals, 0.95),
    }
}

fn run_replication(
    config: &ScenarioConfig,
    strategies: &[StrategySpec<f64>],
    opts: &FitOptions,
    rep: usize,
) -> Vec<ExperimentRow> {
    let row = |strategy: String| ExperimentRow {
        scenario: config.scenario,
        p: config.p,
        n: config.n,
        c: config.concentration(),
        strategy,
        relative_loss: None,
        lambda_star: None,
        psi_star: None,
        replication: rep,
        error: None,
    };
    let setup = draw_model(
        config.scenario,
        config.p,
        derive_seed(config.seed, 0, rep as u64),
    )
    .and_then(|model| {
        let data = generate(
            config.scenario,
            &model,
            config.n,
            config.burn_in,
            derive_seed(config.seed, 1, rep as u64),
        )?;
        Ok((model, data))
    });
    let (model, data) = match setup {
        Ok(x) => x,
        Err(e) => {
            return strategies
                .iter()
                .map(|s| ExperimentRow {
                    error: Some(e.to_string()),
                    ..row(s.label())
                })
                .collect()
        }
    };
    strategies
        .iter()
        .map(|spec| {
            let mut r = row(spec.label());
            match fit_strategy(spec, &data, opts).and_then(|fit| {
                Ok((
                    relative_loss(&model.unconditional_sigma, &fit.weights)?,
                    fit,
                ))
            }) {
                Ok((loss, fit)) => {
                    r.relative_loss = Some(loss);
                    r.lambda_star = fit.lambda_star;
                    r.psi_star = fit.psi_star;
                }
                Err(e) => r.error = Some(e.to_string()),
            }
            r
        })
        .collect()
}

/// Monte Carlo relative-loss experiment: each replication draws a model,
/// simulates a panel, fits every strategy and scores `V_w / V_GMV − 1`
/// against the scenario's stationary covariance. Replications run in
/// parallel; per-cell failures are recorded, not propagated.
pub fn run_relative_loss_experiment(
    config: &ScenarioConfig,
    strategies: &[StrategySpec<f64>],
    opts: &FitOptions,
) -> Result<ExperimentTable> {
    config.validate()?;
    let rows: Vec<ExperimentRow> = (0..config.replications)
        .into_par_iter()
        .map(|rep| run_replication(config, strategies, opts, rep))
        .flatten_iter()
        .collect();
    let summary = strategies
        .iter()
        .map(|s| summarize(&s.label(), &rows))
        .collect();
    Ok(ExperimentTable {
        config: *config,
        rows,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::portfolio::sample_covariance_matrix;
    use approx::assert_relative_eq;

    #[test]
    fn random_covariance_bounds_and_determinism() {
        let a = random_covariance(12, 42);
        let b = random_covariance(12, 42);
        assert_eq!(a.matrix(), b.matrix());
        let spec = SymSpectrum::new(a.matrix());
        assert!(spec.min_eigenvalue() >= 0.1 - 1e-10);
        assert!(spec.max_eigenvalue() <= 10.0 + 1e-10);
        assert!(spec.max_eigenvalue() / spec.min_eigenvalue() <= 100.0 + 1e-8);
        assert!(linalg::asymmetry(a.matrix()) == 0.0);
    }

    #[test]
    fn derive_seed_separates_streams() {
        assert_ne!(derive_seed(1, 0, 0), derive_seed(1, 1, 0));
        assert_ne!(derive_seed(1, 0, 0), derive_seed(1, 0, 1));
        assert_eq!(derive_seed(9, 2, 3), derive_seed(9, 2, 3));
    }

    #[test]
    fn t5_unit_variance() {
        let model = TrueModel::iid(
            DVector::zeros(2),
            CovarianceEstimate::truth(DMatrix::identity(2, 2)).unwrap(),
        )
        .unwrap();
        let n = 200_000;
        let y = gen_t5(&model, n, 3).unwrap();
        let s = sample_covariance_matrix(y.values());
        // Var of the sample variance of t(5)/√(5/3): (κ − 1)/n with κ = 9.
        let se = (8.0 / n as f64).sqrt();
        for j in 0..2 {
            assert!((s[(j, j)] - 1.0).abs() < 3.0 * se, "variance {}", s[(j, j)]);
        }
    }

    #[test]
    fn capm_with_zero_beta_is_gaussian_sigma() {
        let sigma = CovarianceEstimate::truth(DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 2.0]))
            .unwrap();
        let model = TrueModel::iid(DVector::zeros(2), sigma.clone())
            .unwrap()
            .with_capm(DVector::zeros(2))
            .unwrap();
        assert_eq!(model.unconditional_sigma.matrix(), sigma.matrix());
        let y = gen_capm(&model, 100_000, 5).unwrap();
        let s = sample_covariance_matrix(y.values());
        assert_relative_eq!(s, sigma.matrix().clone(), epsilon = 0.05);
    }

    #[test]
    fn ccc_without_dynamics_is_iid_gaussian() {
        let sigma = CovarianceEstimate::truth(DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 4.0]))
            .unwrap();
        let model = TrueModel::iid(DVector::zeros(2), sigma)
            .unwrap()
            .with_ccc(DVector::zeros(2), DVector::zeros(2))
            .unwrap();
        if let ScenarioParams::Ccc { alpha0, .. } = &model.params {
            assert_eq!(alpha0.as_slice(), &[1.0, 4.0]);
        }
        let y = gen_ccc_garch(&model, 100_000, 0, 11).unwrap();
        let s = sample_covariance_matrix(y.values());
        assert!((s[(0, 0)] - 1.0).abs() < 0.03);
        assert!((s[(1, 1)] - 4.0).abs() < 0.12);
        assert!((s[(0, 1)] - 0.5).abs() < 0.05);
    }

    #[test]
    fn ccc_rejects_nonstationary() {
        let model = TrueModel::iid(
            DVector::zeros(1 + 1),
            CovarianceEstimate::truth(DMatrix::identity(2, 2)).unwrap(),
        )
        .unwrap();
        assert!(model
            .with_ccc(DVector::from_element(2, 0.5), DVector::from_element(2, 0.5))
            .is_err());
    }

    #[test]
    fn var1_ar1_variance() {
        let v = var1_stationary_covariance(
            &DMatrix::from_element(1, 1, 1.0),
            &DVector::from_element(1, 0.5),
        );
        assert_relative_eq!(v[(0, 0)], 4.0 / 3.0, epsilon = 1e-15);
        let zero = var1_stationary_covariance(&DMatrix::identity(3, 3), &DVector::zeros(3));
        assert_eq!(zero, DMatrix::identity(3, 3));
    }

    #[test]
    fn var1_rejects_unit_root() {
        let model = TrueModel::iid(
            DVector::zeros(2),
            CovarianceEstimate::truth(DMatrix::identity(2, 2)).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            model.with_var1(DVector::from_row_slice(&[0.2, 1.0])),
            Err(ShrinkError::InvalidData(_))
        ));
    }

    #[test]
    fn generators_are_deterministic() {
        for scenario in [
            Scenario::T5,
            Scenario::Capm,
            Scenario::CccGarch,
            Scenario::Var1,
        ] {
            let m1 = draw_model(scenario, 4, 99).unwrap();
            let m2 = draw_model(scenario, 4, 99).unwrap();
            let a = generate(scenario, &m1, 20, 10, 5).unwrap();
            let b = generate(scenario, &m2, 20, 10, 5).unwrap();
            assert_eq!(a.values(), b.values(), "{scenario}");
        }
    }

    #[test]
    fn true_gmv_has_zero_relative_loss() {
        let model = draw_model(Scenario::Capm, 8, 1).unwrap();
        let w = model.true_gmv().unwrap();
        assert!(relative_loss(&model.unconditional_sigma, &w).unwrap().abs() < 1e-12);
    }

    #[test]
    fn quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&v, 0.5), Some(2.5));
        assert_eq!(quantile_sorted(&v, 0.0), Some(1.0));
        assert_eq!(quantile_sorted(&[], 0.5), None);
    }

    #[test]
    fn scenario_parsing() {
        assert_eq!("CCC".parse::<Scenario>().unwrap(), Scenario::CccGarch);
        assert!("arma".parse::<Scenario>().is_err());
    }
}
