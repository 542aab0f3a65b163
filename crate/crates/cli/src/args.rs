use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::TargetArg;

#[derive(Debug, Parser)]
#[command(
    name = "doubleshrink",
    version,
    about = "Double shrinkage GMV portfolios"
)]
pub struct Cli {
    /// TOML file with default values; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads (default: logical cores).
    #[arg(long, global = true, env = "DOUBLESHRINK_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the double shrinkage portfolio to a return panel.
    Fit(FitArgs),
    /// Tabulate the bona fide (and, for simulated data, oracle) loss over λ.
    LossCurve(FitArgs),
    /// Monte Carlo relative-loss experiment.
    Simulate(SimulateArgs),
    /// Rolling-window out-of-sample backtest.
    Backtest(BacktestArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioArg {
    T5,
    Capm,
    Ccc,
    Var1,
}

impl From<ScenarioArg> for doubleshrink::simulate::Scenario {
    fn from(s: ScenarioArg) -> Self {
        use doubleshrink::simulate::Scenario;
        match s {
            ScenarioArg::T5 => Scenario::T5,
            ScenarioArg::Capm => Scenario::Capm,
            ScenarioArg::Ccc => Scenario::CccGarch,
            ScenarioArg::Var1 => Scenario::Var1,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Shrinkage target: ew, ec or custom:<csv>.
    #[arg(long)]
    pub target: Option<TargetArg>,
    /// Number of λ grid points.
    #[arg(long)]
    pub lambda_grid: Option<usize>,
    /// Clip ψ̂ to [0, 1].
    #[arg(long)]
    pub clamp_psi: bool,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Date-major returns CSV; omit to simulate a panel.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub scenario: Option<ScenarioArg>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum)]
    pub scenario: Option<ScenarioArg>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub replications: Option<usize>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct BacktestArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub rebalance_every: Option<usize>,
    /// Also write the per-period weights of every strategy.
    #[arg(long)]
    pub record_weights: bool,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}
