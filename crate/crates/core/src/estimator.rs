//! Double shrinkage of the GMV portfolio.
//!
//! For a ridge intensity `λ ∈ (0, 1]` (with `η = 1/λ − 1`) the weights are
//! `ψ ŵ_{S;λ} + (1 − ψ) b`. The out-of-sample variance is a quadratic in `ψ`
//! whose minimum value, normalized by `bᵀΣb`, is `B(1 − L_{n;2}(λ))`. The
//! bona fide loss `L̂_{n;2}(λ)` replaces every `Σ`-dependent quantity with a
//! consistent sample estimate, so `λ*` maximizes `L̂_{n;2}` and `ψ*` follows
//! in closed form.
//!
//! Writing `a = bᵀΣŵ / bᵀΣb` and `y = ŵᵀΣŵ / bᵀΣb`:
//!
//! ```text
//! L_{n;2} = (1 − a)² / (1 − 2a + y)        ψ* = (1 − a) / (1 − 2a + y)
//! ```
//!
//! with `a ≈ d₁ / (bᵀSb · 1ᵀS_λ⁻¹1)` and `y ≈ (1 − v̂₂′) d₂ / (bᵀSb · (1ᵀS_λ⁻¹1)²)`.

use std::collections::BTreeMap;

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Result, ShrinkError};
use crate::linalg::{self, SpdFactor, SymSpectrum};
use crate::portfolio::{
    combine_weights, ridge_blend, tikhonov_weights, CovarianceEstimate, CovarianceKind,
    PortfolioWeights,
};
use crate::rmt::{self, OracleFunctionals, RmtFunctionals};
use crate::scalar::Scalar;

/// `η = 1/λ − 1`.
pub fn eta_of<T: Scalar>(lambda: T) -> T {
    T::one() / lambda - T::one()
}

fn check_lambda<T: Scalar>(lambda: T, allow_one: bool) -> Result<()> {
    let ok = lambda > T::zero() && (lambda < T::one() || (allow_one && lambda == T::one()));
    if !ok {
        return Err(ShrinkError::InvalidParameter(format!(
            "lambda = {lambda} outside the admissible range"
        )));
    }
    Ok(())
}

/// Sample quadratic forms needed at one `λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleBlocks<T> {
    /// `bᵀ S b`
    pub b_s_b: T,
    /// `1ᵀ S_λ⁻¹ 1`
    pub ones_inv_ones: T,
    /// `bᵀ S_λ⁻¹ 1`
    pub b_inv_ones: T,
    /// `1ᵀ S_λ⁻² 1`
    pub ones_inv2_ones: T,
}

impl<T: Scalar> SampleBlocks<T> {
    /// Computes the blocks with a Cholesky factor of `S_λ`.
    pub fn from_matrices(
        s: &CovarianceEstimate<T>,
        s_lambda: &CovarianceEstimate<T>,
        b: &PortfolioWeights<T>,
    ) -> Result<Self> {
        let p = s.dim();
        if s_lambda.dim() != p || b.len() != p {
            return Err(ShrinkError::InvalidData("dimension mismatch".into()));
        }
        let ones = linalg::ones::<T>(p);
        let factor = SpdFactor::new(s_lambda.matrix())?;
        let inv_ones = factor.solve(&ones);
        let bv = b.as_vector();
        Ok(Self {
            b_s_b: bv.dot(&(s.matrix() * bv)),
            ones_inv_ones: ones.dot(&inv_ones),
            b_inv_ones: bv.dot(&inv_ones),
            ones_inv2_ones: inv_ones.dot(&inv_ones),
        })
    }
}

/// Every intermediate of the bona fide loss at one `λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BonaFide<T> {
    pub lambda: T,
    pub eta: T,
    pub loss: T,
    pub psi: T,
    pub d1: T,
    pub d2: T,
    /// Estimate of `bᵀΣŵ_{S;λ} / bᵀΣb`.
    pub a: T,
    /// Estimate of `ŵ_{S;λ}ᵀΣŵ_{S;λ} / bᵀΣb`.
    pub y: T,
    pub denominator: T,
    pub blocks: SampleBlocks<T>,
    pub kernels: RmtFunctionals<T>,
}

impl<T: Scalar> BonaFide<T> {
    /// Finite-sample values may leave `[0, 1]`; they are reported as computed.
    pub fn loss_in_unit_interval(&self) -> bool {
        self.loss >= T::zero() && self.loss <= T::one()
    }
}

fn d1_scalar<T: Scalar>(lambda: T, b_inv_ones: T, k: &RmtFunctionals<T>) -> Result<T> {
    if !(k.v_hat > T::zero()) {
        return Err(ShrinkError::KernelDegenerate(format!(
            "v_hat = {}",
            k.v_hat
        )));
    }
    Ok((T::one() - (T::one() - lambda) * b_inv_ones) / (lambda * k.v_hat))
}

fn d2_scalar<T: Scalar>(
    lambda: T,
    ones_inv_ones: T,
    ones_inv2_ones: T,
    k: &RmtFunctionals<T>,
) -> Result<T> {
    if !(k.v_hat > T::zero()) {
        return Err(ShrinkError::KernelDegenerate(format!(
            "v_hat = {}",
            k.v_hat
        )));
    }
    let ratio = k.v1_prime_hat / k.v_hat;
    let correction = T::one() - ratio * (T::one() / lambda - T::one());
    if correction.abs() < T::lit(1e-12) {
        return Err(ShrinkError::KernelDegenerate(format!(
            "d2 correction denominator {correction} vanishes"
        )));
    }
    let lv = lambda * k.v_hat;
    Ok(ones_inv_ones / lv
        - (T::one() - lambda) / lv * (ones_inv2_ones - ratio * ones_inv_ones / lambda) / correction)
}

fn assemble<T: Scalar>(
    lambda: T,
    blocks: SampleBlocks<T>,
    kernels: RmtFunctionals<T>,
) -> Result<BonaFide<T>> {
    let d1 = d1_scalar(lambda, blocks.b_inv_ones, &kernels)?;
    let d2 = d2_scalar(
        lambda,
        blocks.ones_inv_ones,
        blocks.ones_inv2_ones,
        &kernels,
    )?;
    let q = blocks.ones_inv_ones;
    let a = d1 / (blocks.b_s_b * q);
    let y = (T::one() - kernels.v2_prime_hat) * d2 / (blocks.b_s_b * q * q);
    let denominator = T::one() - T::lit(2.0) * a + y;
    if !(denominator > T::zero()) || !denominator.is_finite() {
        return Err(ShrinkError::LossDegenerate(format!(
            "denominator {denominator} at lambda = {lambda}"
        )));
    }
    let gap = T::one() - a;
    Ok(BonaFide {
        lambda,
        eta: eta_of(lambda),
        loss: gap * gap / denominator,
        psi: gap / denominator,
        d1,
        d2,
        a,
        y,
        denominator,
        blocks,
        kernels,
    })
}

/// `d₁(η) = (λ⁻¹ / v̂)(1 − (1 − λ) bᵀS_λ⁻¹1)`, the sample stand-in for
/// `bᵀΣΩ_λ⁻¹1`.
pub fn d1<T: Scalar>(
    s: &CovarianceEstimate<T>,
    s_lambda: &CovarianceEstimate<T>,
    b: &PortfolioWeights<T>,
    kernels: &RmtFunctionals<T>,
    lambda: T,
) -> Result<T> {
    check_lambda(lambda, true)?;
    let blocks = SampleBlocks::from_matrices(s, s_lambda, b)?;
    d1_scalar(lambda, blocks.b_inv_ones, kernels)
}

/// `d₂(η)`, the sample stand-in for `1ᵀΩ_λ⁻¹ΣΩ_λ⁻¹1`.
pub fn d2<T: Scalar>(
    s_lambda: &CovarianceEstimate<T>,
    kernels: &RmtFunctionals<T>,
    lambda: T,
) -> Result<T> {
    check_lambda(lambda, true)?;
    let factor = SpdFactor::new(s_lambda.matrix())?;
    let inv_ones = factor.solve(&linalg::ones(s_lambda.dim()));
    d2_scalar(lambda, inv_ones.sum(), inv_ones.dot(&inv_ones), kernels)
}

/// All bona fide quantities at `λ` through direct solves with `S_λ`.
pub fn bona_fide<T: Scalar>(
    s: &CovarianceEstimate<T>,
    s_lambda: &CovarianceEstimate<T>,
    b: &PortfolioWeights<T>,
    kernels: &RmtFunctionals<T>,
    lambda: T,
) -> Result<BonaFide<T>> {
    check_lambda(lambda, true)?;
    let blocks = SampleBlocks::from_matrices(s, s_lambda, b)?;
    assemble(lambda, blocks, *kernels)
}

/// Bona fide loss `L̂_{n;2}(λ)`.
pub fn bona_fide_loss<T: Scalar>(
    s: &CovarianceEstimate<T>,
    s_lambda: &CovarianceEstimate<T>,
    b: &PortfolioWeights<T>,
    kernels: &RmtFunctionals<T>,
    lambda: T,
) -> Result<T> {
    bona_fide(s, s_lambda, b, kernels, lambda).map(|r| r.loss)
}

/// Bona fide shrinkage intensity `ψ̂_n*(λ)` (unclamped).
pub fn optimal_psi_hat<T: Scalar>(
    s: &CovarianceEstimate<T>,
    s_lambda: &CovarianceEstimate<T>,
    b: &PortfolioWeights<T>,
    kernels: &RmtFunctionals<T>,
    lambda: T,
) -> Result<T> {
    bona_fide(s, s_lambda, b, kernels, lambda).map(|r| r.psi)
}

/// Options for [`ShrinkageProblem::optimize`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitOptions {
    pub grid_size: usize,
    pub lambda_min: f64,
    /// Upper end of the search; `None` picks 0.99 for `c < 1` and 0.95
    /// otherwise.
    pub lambda_max: Option<f64>,
    pub tolerance: f64,
    pub clamp_psi: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            grid_size: 64,
            lambda_min: 0.01,
            lambda_max: None,
            tolerance: 1e-6,
            clamp_psi: false,
        }
    }
}

impl FitOptions {
    pub const MIN_GRID: usize = 16;

    pub fn lambda_range(&self, c: f64) -> (f64, f64) {
        let hi = self.lambda_max.unwrap_or(if c < 1.0 { 0.99 } else { 0.95 });
        (self.lambda_min, hi)
    }
}

/// Fitted double-shrinkage portfolio.
#[derive(Debug, Clone, PartialEq)]
pub struct ShrinkageSolution<T: Scalar> {
    pub lambda_star: T,
    pub psi_star: T,
    /// `ŵ_{S;λ*}`
    pub ridge_weights: PortfolioWeights<T>,
    /// `ψ* ŵ_{S;λ*} + (1 − ψ*) b`
    pub final_weights: PortfolioWeights<T>,
    pub loss_at_optimum: T,
    pub target: PortfolioWeights<T>,
    pub kernels: RmtFunctionals<T>,
    pub diagnostics: BTreeMap<String, T>,
    /// Grid points skipped because the loss was degenerate there.
    pub skipped_lambdas: Vec<T>,
    pub psi_clamped: bool,
    pub loss_out_of_range: bool,
}

/// Sample covariance, target and concentration, with the spectrum of `S_n`
/// computed once and shared by every `λ` evaluation.
#[derive(Debug, Clone)]
pub struct ShrinkageProblem<T: Scalar> {
    s: CovarianceEstimate<T>,
    spectrum: SymSpectrum<T>,
    target: PortfolioWeights<T>,
    c: T,
    ones_proj: DVector<T>,
    target_proj: DVector<T>,
    b_s_b: T,
}

impl<T: Scalar> ShrinkageProblem<T> {
    pub fn new(s: CovarianceEstimate<T>, target: PortfolioWeights<T>, c: T) -> Result<Self> {
        if s.kind() != CovarianceKind::Sample {
            return Err(ShrinkError::InvalidParameter(
                "the estimator expects a sample covariance".into(),
            ));
        }
        if target.len() != s.dim() {
            return Err(ShrinkError::InvalidData(format!(
                "target has {} entries for {} assets",
                target.len(),
                s.dim()
            )));
        }
        if !(c > T::zero()) || !c.is_finite() {
            return Err(ShrinkError::InvalidParameter(format!(
                "c = {c} must be positive"
            )));
        }
        let spectrum = SymSpectrum::new(s.matrix());
        let ones_proj = spectrum.project(&linalg::ones(s.dim()));
        let target_proj = spectrum.project(target.as_vector());
        let b_s_b = target.variance(s.matrix());
        if !(b_s_b > T::zero()) {
            return Err(ShrinkError::InvalidData(format!(
                "target variance bᵀSb = {b_s_b} must be positive"
            )));
        }
        Ok(Self {
            s,
            spectrum,
            target,
            c,
            ones_proj,
            target_proj,
            b_s_b,
        })
    }

    pub fn sample_covariance(&self) -> &CovarianceEstimate<T> {
        &self.s
    }

    pub fn target(&self) -> &PortfolioWeights<T> {
        &self.target
    }

    pub fn concentration(&self) -> T {
        self.c
    }

    pub fn spectrum(&self) -> &SymSpectrum<T> {
        &self.spectrum
    }

    /// Quadratic forms in `S_λ = Q(λD + (1 − λ)I)Qᵀ` from the cached spectrum.
    pub fn blocks(&self, lambda: T) -> Result<SampleBlocks<T>> {
        check_lambda(lambda, true)?;
        let shift = T::one() - lambda;
        let cut = self.spectrum.rank_cutoff();
        let (mut q1, mut qb, mut q2) = (T::zero(), T::zero(), T::zero());
        for i in 0..self.spectrum.dim() {
            let d = lambda * self.spectrum.eigenvalues[i].max(T::zero()) + shift;
            if d <= cut {
                return Err(ShrinkError::SingularCovariance(format!(
                    "S_lambda is singular at lambda = {lambda}"
                )));
            }
            let u = self.ones_proj[i];
            q1 += u * u / d;
            qb += self.target_proj[i] * u / d;
            q2 += u * u / (d * d);
        }
        Ok(SampleBlocks {
            b_s_b: self.b_s_b,
            ones_inv_ones: q1,
            b_inv_ones: qb,
            ones_inv2_ones: q2,
        })
    }

    pub fn kernels(&self, lambda: T) -> Result<RmtFunctionals<T>> {
        check_lambda(lambda, true)?;
        rmt::kernels_from_spectrum(&self.spectrum, eta_of(lambda), self.c)
    }

    /// Bona fide loss, `ψ̂` and building blocks at `λ`.
    pub fn evaluate(&self, lambda: T) -> Result<BonaFide<T>> {
        let kernels = self.kernels(lambda)?;
        let blocks = self.blocks(lambda)?;
        assemble(lambda, blocks, kernels)
    }

    /// Builds the full solution at a fixed `λ` (e.g. `λ = 1`, the weight-only
    /// shrinkage corner).
    pub fn solve_at(&self, lambda: T, clamp_psi: bool) -> Result<ShrinkageSolution<T>> {
        let eval = self.evaluate(lambda)?;
        self.solution_from(eval, clamp_psi, Vec::new())
    }

    /// Grid search for the maximizer of `L̂_{n;2}` followed by golden-section
    /// refinement inside the bracketing grid cell.
    pub fn optimize(&self, opts: &FitOptions) -> Result<ShrinkageSolution<T>> {
        if opts.grid_size < FitOptions::MIN_GRID {
            return Err(ShrinkError::InvalidParameter(format!(
                "grid_size must be at least {}",
                FitOptions::MIN_GRID
            )));
        }
        let (lo, hi) = opts.lambda_range(self.c.to_f64_lossy());
        if !(lo > 0.0 && lo < hi && hi < 1.0) {
            return Err(ShrinkError::InvalidParameter(format!(
                "lambda search range ({lo}, {hi}) must lie inside (0, 1)"
            )));
        }
        let step = (hi - lo) / (opts.grid_size - 1) as f64;
        let grid: Vec<f64> = (0..opts.grid_size).map(|k| lo + step * k as f64).collect();
        let mut skipped = Vec::new();
        let mut best: Option<(usize, BonaFide<T>)> = None;
        for (k, &lam) in grid.iter().enumerate() {
            match self.evaluate(T::lit(lam)) {
                Ok(eval) if eval.loss.is_finite() => {
                    if best.as_ref().is_none_or(|(_, b)| eval.loss > b.loss) {
                        best = Some((k, eval));
                    }
                }
                _ => skipped.push(T::lit(lam)),
            }
        }
        let (k_best, grid_best) = best.ok_or_else(|| {
            ShrinkError::OptimizationFailure("bona fide loss degenerate on the whole grid".into())
        })?;

        let left = grid[k_best.saturating_sub(1)];
        let right = grid[(k_best + 1).min(grid.len() - 1)];
        let objective = |lam: f64| match self.evaluate(T::lit(lam)) {
            Ok(e) if e.loss.is_finite() => e.loss.to_f64_lossy(),
            _ => f64::NEG_INFINITY,
        };
        let refined = golden_section_max(objective, left, right, opts.tolerance);
        let chosen = match self.evaluate(T::lit(refined)) {
            Ok(e) if e.loss > grid_best.loss => e,
            _ => grid_best,
        };
        self.solution_from(chosen, opts.clamp_psi, skipped)
    }

    fn solution_from(
        &self,
        eval: BonaFide<T>,
        clamp_psi: bool,
        skipped: Vec<T>,
    ) -> Result<ShrinkageSolution<T>> {
        let s_lambda = ridge_blend(&self.s, eval.lambda)?;
        let ridge_weights = tikhonov_weights(&s_lambda)?;
        let mut psi = eval.psi;
        let mut psi_clamped = false;
        if clamp_psi {
            let c = psi.max(T::zero()).min(T::one());
            psi_clamped = c != psi;
            psi = c;
        }
        let final_weights = combine_weights(&ridge_weights, &self.target, psi);
        let mut diagnostics = BTreeMap::new();
        diagnostics.insert("d1".into(), eval.d1);
        diagnostics.insert("d2".into(), eval.d2);
        diagnostics.insert("b_s_b".into(), eval.blocks.b_s_b);
        diagnostics.insert("ones_s_lambda_inv_ones".into(), eval.blocks.ones_inv_ones);
        diagnostics.insert("b_s_lambda_inv_ones".into(), eval.blocks.b_inv_ones);
        diagnostics.insert("ones_s_lambda_inv2_ones".into(), eval.blocks.ones_inv2_ones);
        diagnostics.insert("denominator".into(), eval.denominator);
        diagnostics.insert("raw_psi".into(), eval.psi);
        diagnostics.insert("skipped_grid_points".into(), T::lit(skipped.len() as f64));
        Ok(ShrinkageSolution {
            lambda_star: eval.lambda,
            psi_star: psi,
            ridge_weights,
            final_weights,
            loss_at_optimum: eval.loss,
            target: self.target.clone(),
            kernels: eval.kernels,
            diagnostics,
            skipped_lambdas: skipped,
            psi_clamped,
            loss_out_of_range: !eval.loss_in_unit_interval(),
        })
    }
}

/// Maximizes a unimodal-on-bracket function by golden-section search.
pub fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    if b - a <= tol {
        return 0.5 * (a + b);
    }
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > tol {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    if f1 >= f2 {
        x1
    } else {
        x2
    }
}

/// Oracle loss `L₂(λ)` and intensity `ψ*(λ)` at one `λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleValue<T> {
    pub lambda: T,
    pub eta: T,
    pub loss: T,
    pub psi: T,
    pub functionals: OracleFunctionals<T>,
    /// `bᵀΣΩ_λ⁻¹1`
    pub b_sigma_omega_ones: T,
    /// `1ᵀΩ_λ⁻¹1`
    pub ones_omega_ones: T,
    /// `1ᵀΩ_λ⁻¹ΣΩ_λ⁻¹1`
    pub ones_omega_sigma_omega_ones: T,
    pub b_sigma_b: T,
}

fn oracle_assemble<T: Scalar>(
    lambda: T,
    functionals: OracleFunctionals<T>,
    b_sigma_omega_ones: T,
    ones_omega_ones: T,
    ones_omega_sigma_omega_ones: T,
    b_sigma_b: T,
) -> Result<OracleValue<T>> {
    let q = ones_omega_ones;
    let a = b_sigma_omega_ones / (q * b_sigma_b);
    let y = (T::one() - functionals.v2_prime) * ones_omega_sigma_omega_ones / (q * q * b_sigma_b);
    let den = T::one() - T::lit(2.0) * a + y;
    if !(den > T::zero()) {
        return Err(ShrinkError::LossDegenerate(format!(
            "oracle denominator {den} at lambda = {lambda}"
        )));
    }
    let gap = T::one() - a;
    Ok(OracleValue {
        lambda,
        eta: eta_of(lambda),
        loss: gap * gap / den,
        psi: gap / den,
        functionals,
        b_sigma_omega_ones,
        ones_omega_ones,
        ones_omega_sigma_omega_ones,
        b_sigma_b,
    })
}

/// Oracle quantities through `Ω_λ` and a Cholesky solve.
pub fn oracle_value<T: Scalar>(
    sigma: &CovarianceEstimate<T>,
    b: &PortfolioWeights<T>,
    lambda: T,
    c: T,
) -> Result<OracleValue<T>> {
    check_lambda(lambda, false)?;
    let eta = eta_of(lambda);
    let functionals = {
        let v = rmt::oracle_v(sigma, eta, c)?;
        rmt::oracle_derivatives(sigma, eta, c, v)?
    };
    let omega = rmt::omega_lambda(sigma, lambda, functionals.v)?;
    let factor = SpdFactor::new(omega.matrix())?;
    let omega_ones = factor.solve(&linalg::ones(sigma.dim()));
    let bv = b.as_vector();
    let sigma_b = sigma.matrix() * bv;
    oracle_assemble(
        lambda,
        functionals,
        sigma_b.dot(&omega_ones),
        omega_ones.sum(),
        omega_ones.dot(&(sigma.matrix() * &omega_ones)),
        bv.dot(&sigma_b),
    )
}

/// Oracle loss `L₂(λ)`.
pub fn oracle_loss<T: Scalar>(
    sigma: &CovarianceEstimate<T>,
    b: &PortfolioWeights<T>,
    lambda: T,
    c: T,
) -> Result<T> {
    oracle_value(sigma, b, lambda, c).map(|o| o.loss)
}

/// Oracle intensity `ψ*(λ)`.
pub fn oracle_psi<T: Scalar>(
    sigma: &CovarianceEstimate<T>,
    b: &PortfolioWeights<T>,
    lambda: T,
    c: T,
) -> Result<T> {
    oracle_value(sigma, b, lambda, c).map(|o| o.psi)
}

/// Known `Σ` with its spectrum cached, for evaluating oracle curves.
#[derive(Debug, Clone)]
pub struct OracleProblem<T: Scalar> {
    spectrum: SymSpectrum<T>,
    ones_proj: DVector<T>,
    target_proj: DVector<T>,
    b_sigma_b: T,
    c: T,
}

impl<T: Scalar> OracleProblem<T> {
    pub fn new(sigma: &CovarianceEstimate<T>, b: &PortfolioWeights<T>, c: T) -> Result<Self> {
        if b.len() != sigma.dim() {
            return Err(ShrinkError::InvalidData("dimension mismatch".into()));
        }
        let spectrum = SymSpectrum::new(sigma.matrix());
        let ones_proj = spectrum.project(&linalg::ones(sigma.dim()));
        let target_proj = spectrum.project(b.as_vector());
        Ok(Self {
            b_sigma_b: b.variance(sigma.matrix()),
            spectrum,
            ones_proj,
            target_proj,
            c,
        })
    }

    pub fn evaluate(&self, lambda: T) -> Result<OracleValue<T>> {
        check_lambda(lambda, false)?;
        let eta = eta_of(lambda);
        let sig = &self.spectrum.eigenvalues;
        let functionals = rmt::oracle_functionals_from_eigenvalues(sig, eta, self.c)?;
        let scale = functionals.v * lambda;
        let (mut bso, mut oo, mut oso) = (T::zero(), T::zero(), T::zero());
        for i in 0..sig.len() {
            let w = scale * sig[i] + T::one() - lambda;
            let u = self.ones_proj[i];
            bso += self.target_proj[i] * sig[i] * u / w;
            oo += u * u / w;
            oso += u * u * sig[i] / (w * w);
        }
        oracle_assemble(lambda, functionals, bso, oo, oso, self.b_sigma_b)
    }
}

/// Out-of-sample variance `wᵀΣw`.
pub fn finite_sample_loss<T: Scalar>(sigma: &CovarianceEstimate<T>, w: &PortfolioWeights<T>) -> T {
    w.variance(sigma.matrix())
}

/// Pieces of the `ψ`-quadratic for a given ridge portfolio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossQuadratic<T> {
    /// `bᵀΣb`
    pub b_sigma_b: T,
    /// `bᵀΣŵ`
    pub b_sigma_w: T,
    /// `ŵᵀΣŵ`
    pub w_sigma_w: T,
}

impl<T: Scalar> LossQuadratic<T> {
    pub fn new(
        sigma: &CovarianceEstimate<T>,
        w_hat: &PortfolioWeights<T>,
        b: &PortfolioWeights<T>,
    ) -> Self {
        let sw = sigma.matrix() * w_hat.as_vector();
        Self {
            b_sigma_b: b.variance(sigma.matrix()),
            b_sigma_w: b.as_vector().dot(&sw),
            w_sigma_w: w_hat.as_vector().dot(&sw),
        }
    }

    /// `(b − ŵ)ᵀΣ(b − ŵ)`
    pub fn spread(&self) -> T {
        self.b_sigma_b - T::lit(2.0) * self.b_sigma_w + self.w_sigma_w
    }

    /// `(ψŵ + (1 − ψ)b)ᵀΣ(ψŵ + (1 − ψ)b)` expanded in `ψ`.
    pub fn expanded(&self, psi: T) -> T {
        let one_m = T::one() - psi;
        psi * psi * self.w_sigma_w
            + T::lit(2.0) * psi * one_m * self.b_sigma_w
            + one_m * one_m * self.b_sigma_b
    }

    /// Same loss written as `D(ψ − bᵀΣ(b−ŵ)/D)² − (bᵀΣ(b−ŵ))²/D + bᵀΣb`.
    pub fn completed_square(&self, psi: T) -> T {
        let d = self.spread();
        let g = self.b_sigma_b - self.b_sigma_w;
        let shift = psi - g / d;
        d * shift * shift - g * g / d + self.b_sigma_b
    }

    /// Minimizer `bᵀΣ(b − ŵ) / (b − ŵ)ᵀΣ(b − ŵ)`.
    pub fn optimal_psi(&self) -> Result<T> {
        let d = self.spread();
        if !(d > T::zero()) {
            return Err(ShrinkError::DegenerateSolution(
                "ridge weights coincide with the target".into(),
            ));
        }
        Ok((self.b_sigma_b - self.b_sigma_w) / d)
    }

    /// `L_{n;2} = (bᵀΣ(b − ŵ))² / (bᵀΣb · D)`.
    pub fn normalized_gain(&self) -> Result<T> {
        let d = self.spread();
        if !(d > T::zero()) {
            return Err(ShrinkError::DegenerateSolution(
                "ridge weights coincide with the target".into(),
            ));
        }
        let g = self.b_sigma_b - self.b_sigma_w;
        Ok(g * g / (self.b_sigma_b * d))
    }
}

/// Finite-sample optimal intensity `ψ_n*(λ)` for known `Σ`.
pub fn finite_sample_psi<T: Scalar>(
    sigma: &CovarianceEstimate<T>,
    s_lambda: &CovarianceEstimate<T>,
    b: &PortfolioWeights<T>,
) -> Result<T> {
    let w_hat = tikhonov_weights(s_lambda)?;
    LossQuadratic::new(sigma, &w_hat, b).optimal_psi()
}

/// Finite-sample normalized gain `L_{n;2}(λ)` for known `Σ`.
pub fn finite_sample_l2<T: Scalar>(
    sigma: &CovarianceEstimate<T>,
    s_lambda: &CovarianceEstimate<T>,
    b: &PortfolioWeights<T>,
) -> Result<T> {
    let w_hat = tikhonov_weights(s_lambda)?;
    LossQuadratic::new(sigma, &w_hat, b).normalized_gain()
}

/// Relative loss of the target, `bᵀΣb · 1ᵀΣ⁻¹1 − 1`.
pub fn target_relative_loss<T: Scalar>(
    sigma: &CovarianceEstimate<T>,
    b: &PortfolioWeights<T>,
) -> Result<T> {
    let factor = SpdFactor::new(sigma.matrix())?;
    let ones = linalg::ones(sigma.dim());
    Ok(b.variance(sigma.matrix()) * factor.quad(&ones, &ones) - T::one())
}
