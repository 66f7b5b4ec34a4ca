//! Command-line front end: configuration, sweeps, channel probes and
//! single-trial estimate dumps.

// `!(x > 0.0)` style checks deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

pub use commands::{cmd_estimate_once, cmd_list_methods, cmd_probe_channel, cmd_sweep};
pub use config::{parse_config, Config};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl From<chanest::harness::HarnessError> for CliError {
    fn from(e: chanest::harness::HarnessError) -> Self {
        match e {
            chanest::harness::HarnessError::Config(m) => CliError::Config(m),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    #[default]
    On,
    Off,
}

#[derive(Debug, Parser)]
#[command(
    name = "chanest",
    version,
    about = "OFDM channel estimation benchmark",
    after_long_help = concat!(
        "Exit codes: 0 success, 2 configuration error, 3 runtime error.\n\n",
        "Configuration keys (annotated example, values are the defaults):\n\n",
        include_str!("../config/example.toml")
    )
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML configuration file; defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
    /// Dotted `section.key=value` replacing a configuration value.
    #[arg(long = "override", global = true, value_name = "K=V")]
    pub overrides: Vec<String>,
    /// Worker threads for trials; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    pub workers: usize,
    /// Replaces sweep.master_seed.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Emit an SVG chart next to each plot-data file.
    #[arg(long, global = true, value_enum, default_value_t = Switch::On)]
    pub svg: Switch,
    /// More log output; repeat for more.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    /// Errors only.
    #[arg(short, long, global = true)]
    pub quiet: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Monte Carlo sweep: results.csv, results.json, plot_<metric>.csv/.svg.
    Sweep,
    /// Tap autocorrelation of one long realization against J0: probe_channel.csv.
    ProbeChannel,
    /// One trial of the single configured method: estimate_once.csv.
    EstimateOnce,
    /// Print the available estimators.
    ListMethods,
}

/// Everything a subcommand needs besides the configuration.
#[derive(Clone, Debug)]
pub struct Invocation {
    pub config: Config,
    pub out_dir: PathBuf,
    pub workers: usize,
    pub svg: bool,
}

impl Invocation {
    /// Reads and validates the configuration named by `cli`.
    pub fn from_cli(cli: &Cli) -> Result<Self, CliError> {
        let text = match &cli.config {
            Some(p) => std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?,
            None => String::new(),
        };
        let mut config = parse_config(&text, &cli.overrides)?;
        if let Some(seed) = cli.seed {
            config.sweep.master_seed = seed;
        }
        Ok(Self {
            config,
            out_dir: cli.out.clone(),
            workers: cli.workers,
            svg: cli.svg == Switch::On,
        })
    }
}

/// Runs a parsed command line and maps the outcome to an exit code.
pub fn run(cli: Cli) -> ExitCode {
    let result = match cli.command {
        Command::ListMethods => {
            print!("{}", cmd_list_methods());
            Ok(())
        }
        cmd => Invocation::from_cli(&cli).and_then(|inv| match cmd {
            Command::Sweep => cmd_sweep(&inv).map(|_| ()),
            Command::ProbeChannel => cmd_probe_channel(&inv).map(|_| ()),
            Command::EstimateOnce => cmd_estimate_once(&inv).map(|_| ()),
            Command::ListMethods => unreachable!(),
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
