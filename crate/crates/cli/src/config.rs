//! Run settings: command-line flags override the optional TOML file,
//! which overrides built-in defaults.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use doubleshrink::simulate::{Scenario, ScenarioConfig, DEFAULT_BURN_IN};
use doubleshrink::{FitOptions, Target};
use serde::Deserialize;

use crate::args::{BacktestArgs, CommonArgs, FitArgs, Format, ScenarioArg, SimulateArgs};
use crate::error::{CliError, CliResult};
use crate::ingest::ingest_weights;

pub const DEFAULT_SEED: u64 = 20_240_101;
pub const DEFAULT_CURVE_POINTS: usize = 99;
pub const DEFAULT_P: usize = 100;
pub const DEFAULT_N: usize = 200;
pub const DEFAULT_REPLICATIONS: usize = 50;
pub const DEFAULT_WINDOW: usize = 250;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TargetArg {
    Ew,
    Ec,
    Custom(PathBuf),
}

impl FromStr for TargetArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ew" => Ok(TargetArg::Ew),
            "ec" => Ok(TargetArg::Ec),
            _ => match s.strip_prefix("custom:") {
                Some(path) if !path.is_empty() => Ok(TargetArg::Custom(path.into())),
                _ => Err(format!(
                    "unknown target `{s}` (expected ew, ec or custom:<csv>)"
                )),
            },
        }
    }
}

impl<'de> Deserialize<'de> for TargetArg {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

impl TargetArg {
    pub fn resolve(&self, assets: &[String]) -> CliResult<Target> {
        Ok(match self {
            TargetArg::Ew => Target::EquallyWeighted,
            TargetArg::Ec => Target::EqualCorrelation,
            TargetArg::Custom(path) => Target::Custom(ingest_weights(path, assets)?),
        })
    }
}

/// Contents of `--config`. Every key is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ConfigFile {
    pub output_dir: Option<PathBuf>,
    pub input: Option<PathBuf>,
    pub target: Option<TargetArg>,
    pub lambda_grid: Option<usize>,
    pub clamp_psi: Option<bool>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub scenario: Option<ScenarioArg>,
    pub p: Option<usize>,
    pub n: Option<usize>,
    pub replications: Option<usize>,
    pub burn_in: Option<usize>,
    pub window: Option<usize>,
    pub rebalance_every: Option<usize>,
    pub record_weights: Option<bool>,
    pub format: Option<Format>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::parse(path, e.to_string()))
    }
}

/// Where a command's returns come from.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    File(PathBuf),
    Simulated {
        scenario: Scenario,
        p: usize,
        n: usize,
        seed: u64,
        burn_in: usize,
    },
}

#[derive(Debug, Clone)]
pub struct FitSettings {
    pub source: DataSource,
    pub target: TargetArg,
    pub options: FitOptions,
    /// λ points for `loss-curve`.
    pub curve_points: usize,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone)]
pub struct SimulateSettings {
    pub scenario: ScenarioConfig,
    pub target: TargetArg,
    pub options: FitOptions,
    pub format: Format,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone)]
pub struct BacktestSettings {
    pub input: PathBuf,
    pub window: usize,
    pub rebalance_every: usize,
    pub target: TargetArg,
    pub options: FitOptions,
    pub record_weights: bool,
    pub format: Format,
    pub output_dir: PathBuf,
}

fn output_dir(common: &CommonArgs, cfg: &ConfigFile) -> PathBuf {
    common
        .output_dir
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."))
}

fn fit_options(common: &CommonArgs, cfg: &ConfigFile) -> FitOptions {
    let defaults = FitOptions::default();
    FitOptions {
        grid_size: common
            .lambda_grid
            .or(cfg.lambda_grid)
            .unwrap_or(defaults.grid_size),
        clamp_psi: common.clamp_psi || cfg.clamp_psi.unwrap_or(false),
        ..defaults
    }
}

fn target(common: &CommonArgs, cfg: &ConfigFile) -> TargetArg {
    common
        .target
        .clone()
        .or_else(|| cfg.target.clone())
        .unwrap_or(TargetArg::Ew)
}

fn scenario(flag: Option<ScenarioArg>, cfg: &ConfigFile) -> Scenario {
    flag.or(cfg.scenario).unwrap_or(ScenarioArg::T5).into()
}

pub fn fit_settings(args: &FitArgs, cfg: &ConfigFile) -> FitSettings {
    let c = &args.common;
    let source = match args.input.clone().or_else(|| cfg.input.clone()) {
        Some(path) => DataSource::File(path),
        None => DataSource::Simulated {
            scenario: scenario(args.scenario, cfg),
            p: args.p.or(cfg.p).unwrap_or(DEFAULT_P),
            n: args.n.or(cfg.n).unwrap_or(DEFAULT_N),
            seed: c.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED),
            burn_in: cfg.burn_in.unwrap_or(DEFAULT_BURN_IN),
        },
    };
    FitSettings {
        source,
        target: target(c, cfg),
        options: fit_options(c, cfg),
        curve_points: c
            .lambda_grid
            .or(cfg.lambda_grid)
            .unwrap_or(DEFAULT_CURVE_POINTS),
        output_dir: output_dir(c, cfg),
    }
}

pub fn simulate_settings(args: &SimulateArgs, cfg: &ConfigFile) -> SimulateSettings {
    let c = &args.common;
    let mut sc = ScenarioConfig::new(
        scenario(args.scenario, cfg),
        args.p.or(cfg.p).unwrap_or(DEFAULT_P),
        args.n.or(cfg.n).unwrap_or(DEFAULT_N),
        c.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED),
    )
    .with_replications(
        args.replications
            .or(cfg.replications)
            .unwrap_or(DEFAULT_REPLICATIONS),
    );
    sc.burn_in = cfg.burn_in.unwrap_or(DEFAULT_BURN_IN);
    SimulateSettings {
        scenario: sc,
        target: target(c, cfg),
        options: fit_options(c, cfg),
        format: args.format.or(cfg.format).unwrap_or(Format::Csv),
        output_dir: output_dir(c, cfg),
    }
}

pub fn backtest_settings(args: &BacktestArgs, cfg: &ConfigFile) -> CliResult<BacktestSettings> {
    let c = &args.common;
    let input = args
        .input
        .clone()
        .or_else(|| cfg.input.clone())
        .ok_or_else(|| CliError::Usage("backtest needs --input".into()))?;
    Ok(BacktestSettings {
        input,
        window: args.window.or(cfg.window).unwrap_or(DEFAULT_WINDOW),
        rebalance_every: args.rebalance_every.or(cfg.rebalance_every).unwrap_or(1),
        target: target(c, cfg),
        options: fit_options(c, cfg),
        record_weights: args.record_weights || cfg.record_weights.unwrap_or(false),
        format: args.format.or(cfg.format).unwrap_or(Format::Csv),
        output_dir: output_dir(c, cfg),
    })
}
