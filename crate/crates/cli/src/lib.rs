//! Library half of the `doubleshrink` command-line tool.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod ingest;

pub use commands::{cmd_backtest, cmd_fit, cmd_loss_curve, cmd_simulate};
pub use error::{CliError, CliResult};
pub use ingest::{export_returns, ingest_returns};

use args::{Cli, Command};
use config::ConfigFile;

/// Executes a parsed command line.
pub fn run(cli: Cli) -> CliResult<()> {
    let cfg = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    if let Some(threads) = cli.threads.or(cfg.threads) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let mut stdout = std::io::stdout();
    match &cli.command {
        Command::Fit(a) => {
            let out = cmd_fit(&config::fit_settings(a, &cfg))?;
            commands::report_paths(&mut stdout, &[out.weights, out.solution]);
        }
        Command::LossCurve(a) => {
            let out = cmd_loss_curve(&config::fit_settings(a, &cfg))?;
            commands::report_paths(&mut stdout, &[out]);
        }
        Command::Simulate(a) => {
            let out = cmd_simulate(&config::simulate_settings(a, &cfg))?;
            commands::report_paths(&mut stdout, &[out.table, out.summary]);
        }
        Command::Backtest(a) => {
            let out = cmd_backtest(&config::backtest_settings(a, &cfg)?)?;
            commands::report_paths(&mut stdout, &out.files);
        }
    }
    Ok(())
}
