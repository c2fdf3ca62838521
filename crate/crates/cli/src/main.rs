//! `gwolab`: theory tables, Monte Carlo experiments, benchmark runs and
//! trace checks from one binary.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use gwo_lab::target::EpsMode;

#[derive(Debug, Parser)]
#[command(name = "gwolab", version, about = "Grey wolf optimizer convergence laboratory")]
#[command(args_override_self = true)]
pub struct Cli {
    /// Master seed for every random stream.
    #[arg(long, global = true, env = "GWOLAB_SEED", default_value_t = 2024)]
    pub seed: u64,

    /// Worker threads for parallel trials (results do not depend on it).
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    pub workers: Option<u32>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Critical parameters a_r and f_r on an a-grid, one row per even r.
    Theory(TheoryArgs),
    /// Ensemble experiments on one coordinate under frozen leaders.
    Sim {
        #[command(subcommand)]
        kind: SimKind,
    },
    /// Success-rate experiment on the ten-function suite.
    Benchmark(BenchmarkArgs),
    /// Frozen-leader hitting times on the shifted sphere.
    Hitting(HittingArgs),
    /// Check the algorithm condition on a trace CSV (exit 1 on violation).
    Check {
        trace: PathBuf,
    },
    /// Failure product and its exponential bound from a `t,i,j,p` CSV.
    Bound {
        probabilities: PathBuf,
    },
    /// Re-run the command recorded in a manifest.
    Replay {
        manifest: PathBuf,
        /// Write outputs here instead of the recorded directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct TheoryArgs {
    /// Largest even order.
    #[arg(long, default_value_t = 20)]
    pub r_max: u32,

    /// Grid of a values for the f_r columns.
    #[arg(long, value_delimiter = ',', default_value = "1.9,2.0")]
    pub a_grid: Vec<f64>,

    /// Also write theory.csv and a manifest here.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args, Clone)]
pub struct EnsembleArgs {
    /// Trials L (at least 2).
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(2..))]
    pub trials: u64,

    /// Use 10^6 trials.
    #[arg(long)]
    pub full_scale: bool,

    /// Horizon T of the scheduled a.
    #[arg(long, default_value_t = 2000)]
    pub horizon: usize,

    /// Last observed iteration.
    #[arg(long, default_value_t = 100)]
    pub t_max: usize,

    /// Hold a fixed instead of the schedule.
    #[arg(long)]
    pub const_a: Option<f64>,

    /// Shift the drawn leaders so that their mean is 0.
    #[arg(long)]
    pub center_zero: bool,

    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum SimKind {
    /// Central-moment series (moments.csv).
    Moments {
        #[command(flatten)]
        ensemble: EnsembleArgs,
        #[arg(long, value_delimiter = ',', default_value = "2,4,6,8,10,12")]
        orders: Vec<u32>,
    },
    /// Histograms at snapshot iterations (pdf_t<k>.csv).
    Pdf {
        #[command(flatten)]
        ensemble: EnsembleArgs,
        #[arg(long, value_delimiter = ',', default_value = "2,10,20,30,50,100")]
        snapshots: Vec<usize>,
        #[arg(long, default_value_t = 200)]
        bins: usize,
    },
    /// Interval hit probabilities (hitprob.csv).
    Hitprob {
        #[command(flatten)]
        ensemble: EnsembleArgs,
        /// Lower interval ends.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-0.5,0.5,1.5,2.5")]
        lb: Vec<f64>,
        /// Upper interval ends; defaults to lb + 1.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        ub: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantChoice {
    Original,
    Stagnation,
    Both,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6,7,8,9,10",
          value_parser = clap::value_parser!(u8).range(1..=10))]
    pub problems: Vec<u8>,

    #[arg(long, value_enum, default_value_t = VariantChoice::Both)]
    pub variant: VariantChoice,

    #[arg(long, value_delimiter = ',', default_value = "0.1")]
    pub eps: Vec<f64>,

    #[arg(long, default_value_t = EpsMode::Relative)]
    pub mode: EpsMode,

    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,

    #[arg(long, default_value_t = 10)]
    pub agents: usize,

    #[arg(long, default_value_t = 50_000)]
    pub iterations: usize,

    /// Write one trace CSV per original-variant trial into this directory.
    #[arg(long)]
    pub dump_traces: Option<PathBuf>,

    /// Also write benchmark.csv and a manifest here.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HittingArgs {
    #[arg(long, default_value_t = 2)]
    pub dim: usize,

    #[arg(long, default_value_t = 10)]
    pub agents: usize,

    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,

    /// Absolute epsilon of the level set around [1, ..., 1].
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,

    /// Leader coordinates, replicated across dimensions.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "3,4,5")]
    pub leaders: Vec<f64>,

    /// Horizon of the scheduled a; large values keep a close to 2.
    #[arg(long, default_value_t = 1_000_000_000)]
    pub horizon: usize,

    #[arg(long, default_value_t = 1_000_000)]
    pub max_iterations: usize,

    /// Initial positions are uniform in [-box, box] per dimension.
    #[arg(long = "box", default_value_t = 10.0)]
    pub half_box: f64,

    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

/// Bad flag values that clap cannot see on its own.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub const EXIT_CHECK_FAILED: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_RUNTIME: u8 = 3;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let argv: Vec<String> = std::env::args().skip(1).collect();
    match commands::run(cli, argv) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            let usage = e.is::<UsageError>()
                || matches!(e.downcast_ref::<gwo_lab::Error>(), Some(gwo_lab::Error::Domain(_)));
            ExitCode::from(if usage { EXIT_USAGE } else { EXIT_RUNTIME })
        }
    }
}
