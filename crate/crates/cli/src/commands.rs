//! Subcommand implementations. Each writes its artifacts under the
//! configured output directory and returns the paths it wrote.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use doubleshrink::backtest::{run_backtest, BacktestConfig, BacktestReport};
use doubleshrink::estimator::finite_sample_l2;
use doubleshrink::portfolio::{ridge_blend, sample_covariance};
use doubleshrink::simulate::{
    derive_seed, draw_model, generate, run_relative_loss_experiment, ExperimentTable,
};
use doubleshrink::{Covariance, OracleProblem, Panel, Problem, Strategy, StrategyKind, Target};
use serde::Serialize;

use crate::args::Format;
use crate::config::{BacktestSettings, DataSource, FitSettings, SimulateSettings};
use crate::error::{CliError, CliResult};
use crate::ingest::ingest_returns;

/// Returns plus, for simulated data, the population covariance.
pub struct LoadedData {
    pub panel: Panel,
    pub sigma: Option<Covariance>,
}

pub fn load(source: &DataSource) -> CliResult<LoadedData> {
    match source {
        DataSource::File(path) => Ok(LoadedData {
            panel: ingest_returns(path)?,
            sigma: None,
        }),
        &DataSource::Simulated {
            scenario,
            p,
            n,
            seed,
            burn_in,
        } => {
            let model = draw_model(scenario, p, derive_seed(seed, 0, 0))?;
            let panel = generate(scenario, &model, n, burn_in, derive_seed(seed, 1, 0))?;
            Ok(LoadedData {
                panel,
                sigma: Some(model.unconditional_sigma),
            })
        }
    }
}

/// Traditional, target, double and (for `c < 1`) weight-only shrinkage.
pub fn strategy_set(target: &Target, c: f64) -> Vec<Strategy> {
    let mut kinds = vec![
        StrategyKind::Traditional,
        StrategyKind::Target,
        StrategyKind::Double,
    ];
    if c < 1.0 {
        kinds.push(StrategyKind::Bps);
    }
    kinds
        .into_iter()
        .map(|k| Strategy::new(k, target.clone()))
        .collect()
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("report types serialize");
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn csv_writer(path: &Path) -> CliResult<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

fn finish(mut w: csv::Writer<BufWriter<File>>, path: &Path) -> CliResult<()> {
    w.flush().map_err(|e| CliError::io(path, e))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::io(path, e.into())
}

fn cell(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

#[derive(Serialize)]
struct SolutionRecord<'a> {
    target: &'a str,
    assets: &'a [String],
    p: usize,
    n: usize,
    c: f64,
    lambda_star: f64,
    psi_star: f64,
    loss: f64,
    psi_clamped: bool,
    loss_out_of_range: bool,
    skipped_lambdas: &'a [f64],
    kernels: &'a doubleshrink::RmtFunctionals<f64>,
    diagnostics: &'a std::collections::BTreeMap<String, f64>,
    weights: &'a [f64],
    ridge_weights: &'a [f64],
    target_weights: &'a [f64],
}

#[derive(Debug, Clone)]
pub struct FitOutput {
    pub weights: PathBuf,
    pub solution: PathBuf,
}

/// Fits the double shrinkage portfolio; writes `weights.csv` and
/// `solution.json`.
pub fn cmd_fit(settings: &FitSettings) -> CliResult<FitOutput> {
    let data = load(&settings.source)?;
    let panel = &data.panel;
    let target = settings.target.resolve(panel.asset_labels())?;
    let s = sample_covariance(panel);
    let b = target.resolve(&s)?;
    let sol = Problem::new(s, b, panel.concentration())?.optimize(&settings.options)?;

    create_dir(&settings.output_dir)?;
    let weights_path = settings.output_dir.join("weights.csv");
    let mut w = csv_writer(&weights_path)?;
    w.write_record(["asset", "weight"])
        .map_err(csv_err(&weights_path))?;
    for (asset, x) in panel
        .asset_labels()
        .iter()
        .zip(sol.final_weights.as_vector().iter())
    {
        w.write_record([asset.as_str(), &x.to_string()])
            .map_err(csv_err(&weights_path))?;
    }
    finish(w, &weights_path)?;

    let solution_path = settings.output_dir.join("solution.json");
    write_json(
        &solution_path,
        &SolutionRecord {
            target: target.short_name(),
            assets: panel.asset_labels(),
            p: panel.assets(),
            n: panel.periods(),
            c: panel.concentration(),
            lambda_star: sol.lambda_star,
            psi_star: sol.psi_star,
            loss: sol.loss_at_optimum,
            psi_clamped: sol.psi_clamped,
            loss_out_of_range: sol.loss_out_of_range,
            skipped_lambdas: &sol.skipped_lambdas,
            kernels: &sol.kernels,
            diagnostics: &sol.diagnostics,
            weights: sol.final_weights.as_vector().as_slice(),
            ridge_weights: sol.ridge_weights.as_vector().as_slice(),
            target_weights: sol.target.as_vector().as_slice(),
        },
    )?;
    Ok(FitOutput {
        weights: weights_path,
        solution: solution_path,
    })
}

/// One row of the loss curve; oracle columns need a known covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub lambda: f64,
    pub bona_fide_loss: Option<f64>,
    pub psi_hat: Option<f64>,
    pub oracle_loss: Option<f64>,
    pub finite_sample_loss: Option<f64>,
}

/// Evaluates the loss curves on `λ_k = k/(K+1)`, `k = 1..=K`. Points where
/// a quantity is degenerate are left empty.
pub fn loss_curve(
    panel: &Panel,
    target: &Target,
    sigma: Option<&Covariance>,
    points: usize,
) -> CliResult<Vec<CurvePoint>> {
    if points == 0 {
        return Err(CliError::Usage(
            "the λ grid needs at least one point".into(),
        ));
    }
    let s = sample_covariance(panel);
    let b = target.resolve(&s)?;
    let c = panel.concentration();
    let problem = Problem::new(s.clone(), b.clone(), c)?;
    let oracle = sigma
        .map(|sig| OracleProblem::new(sig, &b, c))
        .transpose()?;
    Ok((1..=points)
        .map(|k| {
            let lambda = k as f64 / (points + 1) as f64;
            let bf = problem.evaluate(lambda).ok();
            let oracle_loss = oracle
                .as_ref()
                .and_then(|o| o.evaluate(lambda).ok())
                .map(|v| v.loss);
            let finite_sample_loss = sigma.and_then(|sig| {
                let s_lambda = ridge_blend(&s, lambda).ok()?;
                finite_sample_l2(sig, &s_lambda, &b).ok()
            });
            CurvePoint {
                lambda,
                bona_fide_loss: bf.as_ref().map(|x| x.loss),
                psi_hat: bf.as_ref().map(|x| x.psi),
                oracle_loss,
                finite_sample_loss,
            }
        })
        .collect())
}

/// Writes `loss_curve.csv`.
pub fn cmd_loss_curve(settings: &FitSettings) -> CliResult<PathBuf> {
    let data = load(&settings.source)?;
    let target = settings.target.resolve(data.panel.asset_labels())?;
    let curve = loss_curve(
        &data.panel,
        &target,
        data.sigma.as_ref(),
        settings.curve_points,
    )?;
    create_dir(&settings.output_dir)?;
    let path = settings.output_dir.join("loss_curve.csv");
    let mut w = csv_writer(&path)?;
    w.write_record([
        "lambda",
        "bona_fide_loss",
        "psi_hat",
        "oracle_loss",
        "finite_sample_loss",
    ])
    .map_err(csv_err(&path))?;
    for pt in &curve {
        w.write_record([
            pt.lambda.to_string(),
            cell(pt.bona_fide_loss),
            cell(pt.psi_hat),
            cell(pt.oracle_loss),
            cell(pt.finite_sample_loss),
        ])
        .map_err(csv_err(&path))?;
    }
    finish(w, &path)?;
    Ok(path)
}

#[derive(Debug, Clone)]
pub struct SimulateOutput {
    pub table: PathBuf,
    pub summary: PathBuf,
    pub experiment: ExperimentTable,
}

const EXPERIMENT_HEADER: [&str; 10] = [
    "scenario",
    "p",
    "n",
    "c",
    "replication",
    "strategy",
    "relative_loss",
    "lambda_star",
    "psi_star",
    "error",
];

/// Runs the relative-loss experiment; writes the per-replication table
/// (`experiment.csv` or `experiment.json`) and `summary.json`.
pub fn cmd_simulate(settings: &SimulateSettings) -> CliResult<SimulateOutput> {
    let cfg = &settings.scenario;
    cfg.validate()?;
    let labels: Vec<String> = (0..cfg.p).map(|i| format!("A{i}")).collect();
    let target = settings.target.resolve(&labels)?;
    let strategies = strategy_set(&target, cfg.concentration());
    let table = run_relative_loss_experiment(cfg, &strategies, &settings.options)?;

    create_dir(&settings.output_dir)?;
    let table_path = match settings.format {
        Format::Json => {
            let path = settings.output_dir.join("experiment.json");
            write_json(&path, &table.rows)?;
            path
        }
        Format::Csv => {
            let path = settings.output_dir.join("experiment.csv");
            let mut w = csv_writer(&path)?;
            w.write_record(EXPERIMENT_HEADER).map_err(csv_err(&path))?;
            for r in &table.rows {
                w.write_record([
                    r.scenario.name().to_string(),
                    r.p.to_string(),
                    r.n.to_string(),
                    r.c.to_string(),
                    r.replication.to_string(),
                    r.strategy.clone(),
                    cell(r.relative_loss),
                    cell(r.lambda_star),
                    cell(r.psi_star),
                    r.error.clone().unwrap_or_default(),
                ])
                .map_err(csv_err(&path))?;
            }
            finish(w, &path)?;
            path
        }
    };
    let summary_path = settings.output_dir.join("summary.json");
    #[derive(Serialize)]
    struct Summary<'a> {
        scenario: &'a str,
        p: usize,
        n: usize,
        c: f64,
        seed: u64,
        replications: usize,
        burn_in: usize,
        strategies: &'a [doubleshrink::simulate::StrategySummary],
    }
    write_json(
        &summary_path,
        &Summary {
            scenario: cfg.scenario.name(),
            p: cfg.p,
            n: cfg.n,
            c: cfg.concentration(),
            seed: cfg.seed,
            replications: cfg.replications,
            burn_in: cfg.burn_in,
            strategies: &table.summary,
        },
    )?;
    Ok(SimulateOutput {
        table: table_path,
        summary: summary_path,
        experiment: table,
    })
}

#[derive(Debug, Clone)]
pub struct BacktestOutput {
    pub files: Vec<PathBuf>,
    pub report: BacktestReport,
}

/// Runs the rolling-window backtest. Always writes the full
/// `backtest.json`; the metric table goes to `metrics.csv` in CSV mode.
pub fn cmd_backtest(settings: &BacktestSettings) -> CliResult<BacktestOutput> {
    let panel = ingest_returns(&settings.input)?;
    if settings.window >= panel.periods() {
        return Err(CliError::Usage(format!(
            "window {} leaves no out-of-sample period in a panel of {} periods",
            settings.window,
            panel.periods()
        )));
    }
    let target = settings.target.resolve(panel.asset_labels())?;
    let c = panel.assets() as f64 / settings.window as f64;
    let mut config = BacktestConfig::new(settings.window, strategy_set(&target, c));
    config.rebalance_every = settings.rebalance_every;
    config.fit = settings.options;
    config.record_weights = settings.record_weights;
    let report = run_backtest(&panel, &config)?;

    create_dir(&settings.output_dir)?;
    let mut files = Vec::new();
    let json = settings.output_dir.join("backtest.json");
    write_json(&json, &report)?;
    files.push(json);
    if settings.format == Format::Csv {
        let path = settings.output_dir.join("metrics.csv");
        let mut w = csv_writer(&path)?;
        w.write_record([
            "strategy",
            "sigma",
            "mean",
            "sharpe",
            "turnover",
            "avg_abs_weight",
            "avg_max_weight",
            "avg_min_weight",
            "avg_short_mass",
            "short_fraction",
            "failed_windows",
        ])
        .map_err(csv_err(&path))?;
        for s in &report.strategies {
            let m = &s.characteristics;
            w.write_record([
                s.strategy.clone(),
                s.sigma.to_string(),
                s.mean.to_string(),
                cell(s.sharpe),
                s.turnover.to_string(),
                m.avg_abs_weight.to_string(),
                m.avg_max_weight.to_string(),
                m.avg_min_weight.to_string(),
                m.avg_short_mass.to_string(),
                m.short_fraction.to_string(),
                s.failed_windows.len().to_string(),
            ])
            .map_err(csv_err(&path))?;
        }
        finish(w, &path)?;
        files.push(path);
    }
    if settings.record_weights {
        for s in &report.strategies {
            let Some(history) = &s.weight_history else {
                continue;
            };
            let path = settings
                .output_dir
                .join(format!("weights_{}.csv", s.strategy));
            let mut w = csv_writer(&path)?;
            let mut header = vec!["date".to_string()];
            header.extend(report.assets.iter().cloned());
            w.write_record(&header).map_err(csv_err(&path))?;
            for (row, date) in history.iter().zip(&report.dates) {
                let mut rec = vec![date.clone()];
                rec.extend(row.iter().map(|x| x.to_string()));
                w.write_record(&rec).map_err(csv_err(&path))?;
            }
            finish(w, &path)?;
            files.push(path);
        }
    }
    Ok(BacktestOutput { files, report })
}

/// Prints a short human summary of written files to `out`.
pub fn report_paths(out: &mut impl Write, paths: &[PathBuf]) {
    for p in paths {
        let _ = writeln!(out, "wrote {}", p.display());
    }
}
