//! Command-line grammar.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "bcbound",
    version,
    about = "Rate-region bounds for two-receiver broadcast channels and admissibility checks for correlated sources"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a rate region over a direction set.
    Region {
        #[arg(value_enum)]
        kind: RegionArg,
        #[command(flatten)]
        inputs: Inputs,
        /// Fix the channel input law (comma-separated) instead of searching it.
        #[arg(long, value_delimiter = ',')]
        input: Option<Vec<f64>>,
        #[command(flatten)]
        common: Common,
    },
    /// Run an admissibility check.
    Check {
        #[arg(value_enum)]
        which: CheckArg,
        #[command(flatten)]
        inputs: Inputs,
        /// Hamming distortion budget of receiver 1 (lossy check).
        #[arg(long, default_value_t = 0.0)]
        d1: f64,
        /// Hamming distortion budget of receiver 2 (lossy check).
        #[arg(long, default_value_t = 0.0)]
        d2: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Blackwell channel with the example source: GA condition versus the ten-coordinate one.
    BlackwellDemo {
        #[arg(long, default_value_t = 0.0415)]
        alpha: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Common part of a source pair.
    CommonPart {
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a built-in channel or source as JSON.
    Gen {
        #[command(subcommand)]
        what: GenArg,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RegionArg {
    Cin,
    Cout,
    Source,
    Cd,
    R10Channel,
    R10Source,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CheckArg {
    Ga,
    New,
    Capacity,
    Markov,
    Degraded,
    MoreCapable,
    Lossy,
}

#[derive(Debug, Subcommand)]
pub enum GenArg {
    Blackwell {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    ExampleSource {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    CleanPipe {
        #[arg(long)]
        bits: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct Inputs {
    /// Source pair JSON file.
    #[arg(long)]
    pub src: Option<PathBuf>,
    /// Broadcast channel JSON file.
    #[arg(long)]
    pub ch: Option<PathBuf>,
}

/// Flags shared by every computing subcommand.
#[derive(Debug, Args)]
pub struct Common {
    #[arg(long, default_value_t = 1.0)]
    pub kappa: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Random directions on top of the structured ones.
    #[arg(long)]
    pub directions: Option<usize>,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Cardinality overrides, e.g. `v0=4,v1=3,v2=3,u=4`.
    #[arg(long)]
    pub cards: Option<String>,
    /// Output file for the JSON result (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write a `lambda_1,...,lambda_d,h` CSV (region command).
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}
