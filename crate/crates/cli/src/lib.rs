//! Command-line driver: schedule optimization sweeps, reference curves, Monte Carlo
//! batches and mutual-information datasets.

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod dataset;

pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "mpskrx", version, about = "Adaptive M-PSK receiver optimizer and simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimize amplitude schedules over the mean-photon grid.
    Optimize(CommonArgs),
    /// Tabulate QNL, Helstrom, Holevo and heterodyne-capacity curves.
    Bounds(CommonArgs),
    /// Run Monte Carlo trial batches for schedule files (or freshly optimized schedules).
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Schedule files written by `optimize`.
        schedules: Vec<PathBuf>,
    },
    /// Mutual information of the channel induced by each schedule.
    Info {
        #[command(flatten)]
        common: CommonArgs,
        schedules: Vec<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Sweep configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `output` in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// RNG seed; overrides `seed` in the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Also write the per-history table of every schedule (N <= 12).
    #[arg(long)]
    pub emit_histories: bool,
}

#[derive(Debug)]
pub struct CliError {
    code: i32,
    message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_IO,
            message: message.into(),
        }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_NUMERICAL,
            message: message.into(),
        }
    }

    fn from_csv(e: csv::Error) -> Self {
        CliError::io(e.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        self.code
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<mpsk_receiver::Error> for CliError {
    fn from(e: mpsk_receiver::Error) -> Self {
        use mpsk_receiver::Error as E;
        let code = match &e {
            E::Io(_) => EXIT_IO,
            E::DegenerateEvidence | E::Numerical(_) => EXIT_NUMERICAL,
            _ => EXIT_CONFIG,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let common = match &cli.command {
        Command::Optimize(c) | Command::Bounds(c) => c,
        Command::Simulate { common, .. } | Command::Info { common, .. } => common,
    };
    if let Some(n) = common.threads {
        // A second call in the same process (tests) keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let mut cfg = config::SweepConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    let out = common
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .ok_or_else(|| CliError::config("no output directory: pass --out or set `output`"))?;
    match &cli.command {
        Command::Optimize(c) => commands::optimize(&cfg, &out, c.emit_histories),
        Command::Bounds(_) => commands::bounds(&cfg, &out),
        Command::Simulate { schedules, .. } => commands::simulate(&cfg, schedules, &out),
        Command::Info { schedules, .. } => commands::info(&cfg, schedules, &out),
    }
}
