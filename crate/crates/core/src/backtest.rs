//! Rolling-window out-of-sample evaluation.
//!
//! At every rebalance date `t` each strategy is refitted on the `window`
//! most recent columns `t − n + 1 ..= t` and the portfolio return
//! `wᵀy_{t+1}` is recorded. Between rebalances the holdings drift with
//! realized (simple) returns.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, ShrinkError};
use crate::estimator::FitOptions;
use crate::portfolio::{sample_covariance, ReturnPanel};
use crate::targets::{equally_weighted, fit_strategy_on, StrategySpec};

/// Turnover definition stored alongside every report.
pub const TURNOVER_DEFINITION: &str =
    "sum over rebalance dates after the first of sum_j |w_post - w_pre|, \
where w_pre are the previous holdings drifted by realized returns and renormalized; \
not comparable to turnover figures computed without drift adjustment";

#[derive(Debug, Clone)]
pub struct BacktestConfig {
    pub window: usize,
    pub rebalance_every: usize,
    pub strategies: Vec<StrategySpec<f64>>,
    pub fit: FitOptions,
    /// Keep the per-period weight matrix in the report.
    pub record_weights: bool,
}

impl BacktestConfig {
    pub fn new(window: usize, strategies: Vec<StrategySpec<f64>>) -> Self {
        Self {
            window,
            rebalance_every: 1,
            strategies,
            fit: FitOptions::default(),
            record_weights: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window < 3 {
            return Err(ShrinkError::InvalidParameter(format!(
                "window must be >= 3, got {}",
                self.window
            )));
        }
        if self.rebalance_every < 1 {
            return Err(ShrinkError::InvalidParameter(
                "rebalance_every must be >= 1".into(),
            ));
        }
        if self.strategies.is_empty() {
            return Err(ShrinkError::InvalidParameter(
                "no strategies to backtest".into(),
            ));
        }
        Ok(())
    }
}

/// Averages of the held weights over the evaluation span.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightCharacteristics {
    pub avg_abs_weight: f64,
    pub avg_max_weight: f64,
    pub avg_min_weight: f64,
    pub avg_short_mass: f64,
    pub short_fraction: f64,
}

/// Weight characteristics of a `T × p` history (one row per period).
pub fn weight_characteristics(history: &DMatrix<f64>) -> WeightCharacteristics {
    let (t, p) = history.shape();
    let (tf, tpf) = (t as f64, (t * p) as f64);
    let mut abs = 0.0;
    let mut max = 0.0;
    let mut min = 0.0;
    let mut short_mass = 0.0;
    let mut shorts = 0usize;
    for row in history.row_iter() {
        max += row.max();
        min += row.min();
        for &w in row.iter() {
            abs += w.abs();
            if w < 0.0 {
                short_mass += w;
                shorts += 1;
            }
        }
    }
    WeightCharacteristics {
        avg_abs_weight: abs / tpf,
        avg_max_weight: max / tf,
        avg_min_weight: min / tf,
        avg_short_mass: short_mass / tf,
        short_fraction: shorts as f64 / tpf,
    }
}

/// Holdings after one period: `w_j(1 + r_j) / (1 + wᵀr)`. Left unchanged
/// when the portfolio value is wiped out.
pub fn drift(w: &DVector<f64>, r: &DVector<f64>) -> DVector<f64> {
    let growth = 1.0 + w.dot(r);
    if growth.abs() <= f64::EPSILON {
        return w.clone();
    }
    DVector::from_fn(w.len(), |j, _| w[j] * (1.0 + r[j]) / growth)
}

/// Drift-adjusted L1 turnover.
///
/// `history` holds the weights held in each period (rows), `returns` the
/// realized asset returns of the same periods and `rebalance_times` the
/// row indices at which trading took place. The first rebalance is the
/// initial purchase and is not counted.
pub fn turnover(history: &DMatrix<f64>, returns: &DMatrix<f64>, rebalance_times: &[usize]) -> f64 {
    rebalance_times
        .iter()
        .filter(|&&t| t > 0)
        .map(|&t| {
            let prev = history.row(t - 1).transpose();
            let r = returns.row(t - 1).transpose();
            (history.row(t).transpose() - drift(&prev, &r)).lp_norm(1)
        })
        .sum()
}

/// Out-of-sample performance of one strategy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategyReport {
    pub strategy: String,
    pub out_of_sample_returns: Vec<f64>,
    pub sigma: f64,
    pub mean: f64,
    /// `mean / sigma` (zero risk-free rate); absent when `sigma = 0`.
    pub sharpe: Option<f64>,
    pub turnover: f64,
    #[serde(flatten)]
    pub characteristics: WeightCharacteristics,
    /// Period indices (into the out-of-sample span) of rebalance dates
    /// at which the fit failed and the previous weights were kept.
    pub failed_windows: Vec<usize>,
    pub lambda_star: Vec<Option<f64>>,
    pub psi_star: Vec<Option<f64>>,
    pub weight_history: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BacktestReport {
    pub window: usize,
    pub rebalance_every: usize,
    pub periods: usize,
    pub assets: Vec<String>,
    /// Labels of the out-of-sample periods, when the panel carries them.
    pub dates: Vec<String>,
    pub turnover_definition: String,
    pub strategies: Vec<StrategyReport>,
}

impl BacktestReport {
    pub fn get(&self, strategy: &str) -> Option<&StrategyReport> {
        self.strategies.iter().find(|s| s.strategy == strategy)
    }
}

/// Mean and standard deviation (divisor `T − 1`, zero for `T = 1`).
pub fn mean_and_sigma(x: &[f64]) -> (f64, f64) {
    let t = x.len() as f64;
    let mean = x.iter().sum::<f64>() / t;
    if x.len() < 2 {
        return (mean, 0.0);
    }
    let ss = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    (mean, (ss / (t - 1.0)).sqrt())
}

fn run_strategy(
    panel: &ReturnPanel<f64>,
    config: &BacktestConfig,
    spec: &StrategySpec<f64>,
) -> StrategyReport {
    let y = panel.values();
    let (p, len) = y.shape();
    let n = config.window;
    let periods = len - n;
    let c = p as f64 / n as f64;

    let mut history = DMatrix::zeros(periods, p);
    let mut realized = DMatrix::zeros(periods, p);
    let mut returns = Vec::with_capacity(periods);
    let mut rebalances = Vec::new();
    let mut failed = Vec::new();
    let mut lambdas = Vec::new();
    let mut psis = Vec::new();
    let mut last_fit: Option<DVector<f64>> = None;
    let mut held = DVector::zeros(p);

    for k in 0..periods {
        // Information set ends at column t = n − 1 + k.
        if k % config.rebalance_every == 0 {
            let cols = y.columns(k, n).into_owned();
            let s = sample_covariance(
                &ReturnPanel::from_matrix(cols).expect("window of a valid panel"),
            );
            match fit_strategy_on(spec, &s, c, &config.fit) {
                Ok(fit) => {
                    lambdas.push(fit.lambda_star);
                    psis.push(fit.psi_star);
                    last_fit = Some(fit.weights.into_vector());
                }
                Err(_) => {
                    failed.push(k);
                    lambdas.push(None);
                    psis.push(None);
                }
            }
            held = last_fit
                .clone()
                .unwrap_or_else(|| equally_weighted::<f64>(p).into_vector());
            rebalances.push(k);
        }
        let r = y.column(n + k).into_owned();
        history.set_row(k, &held.transpose());
        realized.set_row(k, &r.transpose());
        returns.push(held.dot(&r));
        held = drift(&held, &r);
    }

    let (mean, sigma) = mean_and_sigma(&returns);
    StrategyReport {
        strategy: spec.label(),
        sigma,
        mean,
        sharpe: (sigma > 0.0).then(|| mean / sigma),
        turnover: turnover(&history, &realized, &rebalances),
        characteristics: weight_characteristics(&history),
        failed_windows: failed,
        lambda_star: lambdas,
        psi_star: psis,
        weight_history: config.record_weights.then(|| {
            history
                .row_iter()
                .map(|r| r.iter().copied().collect())
                .collect()
        }),
        out_of_sample_returns: returns,
    }
}

/// Runs every configured strategy over the panel. Strategies are
/// evaluated concurrently; each one walks its windows sequentially.
/// A failed fit keeps the previous rebalance's weights (equal weights if
/// the very first fit fails) and is listed in `failed_windows`.
pub fn run_backtest(panel: &ReturnPanel<f64>, config: &BacktestConfig) -> Result<BacktestReport> {
    config.validate()?;
    let len = panel.periods();
    if len < config.window + 1 {
        return Err(ShrinkError::InvalidData(format!(
            "panel has {len} periods; a window of {} needs at least {}",
            config.window,
            config.window + 1
        )));
    }
    let strategies = config
        .strategies
        .par_iter()
        .map(|spec| run_strategy(panel, config, spec))
        .collect();
    let dates = panel
        .time_labels()
        .get(config.window..)
        .map(<[String]>::to_vec)
        .unwrap_or_default();
    Ok(BacktestReport {
        window: config.window,
        rebalance_every: config.rebalance_every,
        periods: len - config.window,
        assets: panel.asset_labels().to_vec(),
        dates,
        turnover_definition: TURNOVER_DEFINITION.to_string(),
        strategies,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::{StrategyKind, TargetSpec};
    use approx::assert_relative_eq;

    fn ew() -> StrategySpec<f64> {
        StrategySpec::new(StrategyKind::Target, TargetSpec::EquallyWeighted)
    }

    #[test]
    fn hand_characteristics() {
        let h = DMatrix::from_row_slice(1, 3, &[0.5, 0.75, -0.25]);
        let m = weight_characteristics(&h);
        assert_relative_eq!(m.avg_abs_weight, 0.5);
        assert_relative_eq!(m.avg_max_weight, 0.75);
        assert_relative_eq!(m.avg_min_weight, -0.25);
        assert_relative_eq!(m.avg_short_mass, -0.25);
        assert_relative_eq!(m.short_fraction, 1.0 / 3.0);
    }

    #[test]
    fn long_only_has_no_short_measures() {
        let h = DMatrix::from_row_slice(2, 2, &[0.3, 0.7, 1.0, 0.0]);
        let m = weight_characteristics(&h);
        assert_eq!(m.avg_short_mass, 0.0);
        assert_eq!(m.short_fraction, 0.0);
    }

    #[test]
    fn turnover_cases() {
        let zeros = DMatrix::zeros(2, 2);
        let constant = DMatrix::from_row_slice(2, 2, &[0.4, 0.6, 0.4, 0.6]);
        assert_eq!(turnover(&constant, &zeros, &[0, 1]), 0.0);
        let swap = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        assert_eq!(turnover(&swap, &zeros, &[0, 1]), 2.0);
        // Equal weights, asset 0 gains 10%: drifted (0.55, 0.45)/1.05.
        let ew = DMatrix::from_element(2, 2, 0.5);
        let r = DMatrix::from_row_slice(2, 2, &[0.1, 0.0, 0.0, 0.0]);
        let expected = 2.0 * (0.55 / 1.05 - 0.5);
        assert_relative_eq!(turnover(&ew, &r, &[0, 1]), expected, epsilon = 1e-15);
        assert!(expected > 0.0);
    }

    #[test]
    fn ew_returns_are_cross_sectional_means() {
        let y = DMatrix::from_fn(3, 12, |i, t| ((i * 7 + t * 3) % 11) as f64 / 100.0 - 0.05);
        let panel = ReturnPanel::from_matrix(y.clone()).unwrap();
        let report = run_backtest(&panel, &BacktestConfig::new(5, vec![ew()])).unwrap();
        let s = &report.strategies[0];
        assert_eq!(s.out_of_sample_returns.len(), 7);
        for (k, r) in s.out_of_sample_returns.iter().enumerate() {
            assert_relative_eq!(*r, y.column(5 + k).mean(), epsilon = 1e-15);
        }
        assert_relative_eq!(s.sharpe.unwrap() * s.sigma, s.mean, epsilon = 1e-12);
    }

    #[test]
    fn minimal_panel_gives_one_return() {
        let y = DMatrix::from_fn(2, 4, |i, t| (i + 2 * t) as f64 / 50.0);
        let panel = ReturnPanel::from_matrix(y).unwrap();
        let report = run_backtest(&panel, &BacktestConfig::new(3, vec![ew()])).unwrap();
        assert_eq!(report.strategies[0].out_of_sample_returns.len(), 1);
        assert_eq!(report.strategies[0].sigma, 0.0);
        assert!(report.strategies[0].sharpe.is_none());
        let short = ReturnPanel::from_matrix(DMatrix::from_element(2, 3, 0.01)).unwrap();
        assert!(run_backtest(&short, &BacktestConfig::new(3, vec![ew()])).is_err());
    }

    #[test]
    fn failure_carries_weights_forward() {
        // BPS is undefined for c >= 1, so every fit fails.
        let y = DMatrix::from_fn(4, 8, |i, t| ((i * 5 + t * 3) % 7) as f64 / 100.0);
        let panel = ReturnPanel::from_matrix(y).unwrap();
        let bps = StrategySpec::new(StrategyKind::Bps, TargetSpec::EquallyWeighted);
        let report = run_backtest(&panel, &BacktestConfig::new(4, vec![bps])).unwrap();
        assert_eq!(report.strategies[0].failed_windows, vec![0, 1, 2, 3]);
    }

    #[test]
    fn stride_drifts_between_rebalances() {
        let y = DMatrix::from_fn(2, 9, |i, t| {
            if i == 0 {
                0.02
            } else {
                -0.01 + 0.001 * t as f64
            }
        });
        let panel = ReturnPanel::from_matrix(y).unwrap();
        let mut cfg = BacktestConfig::new(3, vec![ew()]);
        cfg.rebalance_every = 3;
        cfg.record_weights = true;
        let s = &run_backtest(&panel, &cfg).unwrap().strategies[0];
        let h = s.weight_history.as_ref().unwrap();
        assert_eq!(h[0], vec![0.5, 0.5]);
        assert!(h[1][0] > 0.5);
        assert_eq!(h[3], vec![0.5, 0.5]);
        assert!(s.turnover > 0.0);
    }
}
