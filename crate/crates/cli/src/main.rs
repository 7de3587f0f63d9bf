//! `smc`: batch front end for smc-core.
//!
//! Each subcommand prints a CSV table on stdout and writes a JSON run manifest next to
//! it. Exit status: 0 success, 1 failed check or other error, 2 bad spec, 3 cap
//! exceeded, 4 infeasible construction.

mod commands;
mod input;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug)]
pub enum CliError {
    Core(smc_core::Error),
    Spec(String),
    Io(String),
    /// A checked inequality failed; the table is still printed.
    Violation(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use smc_core::Error as E;
        match self {
            CliError::Spec(_) | CliError::Core(E::Spec { .. }) => 2,
            CliError::Core(E::CapExceeded { .. }) => 3,
            CliError::Core(E::Infeasible(_)) => 4,
            _ => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Spec(s) => write!(f, "spec error: {s}"),
            CliError::Io(s) => write!(f, "io error: {s}"),
            CliError::Violation(s) => write!(f, "check failed: {s}"),
        }
    }
}

impl From<smc_core::Error> for CliError {
    fn from(e: smc_core::Error) -> Self {
        CliError::Core(e)
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "smc",
    version,
    about = "Secure multiplex coding bounds, oracles and constructions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Master seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Maximum number of enumerated terms for exhaustive computations.
    #[arg(long, global = true, default_value_t = smc_core::DEFAULT_CAP)]
    pub cap: u64,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Report information quantities in bits instead of nats.
    #[arg(long, global = true)]
    pub bits: bool,
    /// Manifest path; defaults to `<command>.manifest.json` in the working directory.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    /// Skip writing the manifest.
    #[arg(long, global = true)]
    pub no_manifest: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundKind {
    First,
    Second,
    Practical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CheckMode {
    /// Random assignments `A → X` with product weights.
    Thm1,
    /// Invertible affine maps on `F_q^dim`.
    Thm2,
    /// Every mixing layer on top of a fixed codebook.
    Lem4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CapacityMode {
    Degraded,
    Sample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    BccEquivocation,
    BccLeaked,
    Bcd,
    Smc,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Finite-blocklength leakage bounds over a rho grid.
    Bound {
        #[arg(long)]
        chain: PathBuf,
        #[arg(long, value_enum, default_value = "first")]
        construction: BoundKind,
        /// Blocklength.
        #[arg(long)]
        n: usize,
        /// Uniform messages at rates R_0,R_1,…,R_T (nats per symbol).
        #[arg(long)]
        rates: Option<String>,
        /// Joint source over (S_0, S_1, …, S_T) instead of uniform rates.
        #[arg(long)]
        source: Option<PathBuf>,
        /// Leaked index set, e.g. `1,3`; every nonempty set when absent.
        #[arg(long)]
        set: Option<String>,
        /// ln|B_1| (first construction only).
        #[arg(long, default_value_t = 0.0)]
        log_b1: f64,
        #[arg(long, default_value = "0.05:0.95:19")]
        rho_grid: String,
        /// Use the smooth ln(1 + e^{ρx})/ρ form without the union-bound overhead.
        #[arg(long)]
        no_overhead: bool,
        /// Practical bound: the code carries a common message (uses the optimised φ).
        #[arg(long)]
        common: bool,
    },
    /// Error exponents and the universal exponent quadruple.
    Exponent {
        #[arg(long)]
        chain: PathBuf,
        #[arg(long)]
        rp: f64,
        #[arg(long)]
        rc: f64,
        /// Message rates R_0,R_1,…,R_T; they must sum to R_p + R_c.
        #[arg(long)]
        rates: String,
        #[arg(long)]
        set: Option<String>,
    },
    /// Exhaustive ensemble check of a resolvability bound.
    ResolveCheck {
        #[arg(long, value_enum)]
        mode: CheckMode,
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, conflicts_with = "rho_grid")]
        rho: Option<f64>,
        #[arg(long)]
        rho_grid: Option<String>,
        /// Print the number of ensemble members and stop.
        #[arg(long)]
        dry_run: bool,
    },
    /// Exact leakage of a code bundle by enumeration.
    Leakage {
        #[arg(long)]
        code: PathBuf,
        /// Message source; uniform over all messages when absent.
        #[arg(long)]
        source: Option<PathBuf>,
        #[arg(long)]
        set: Option<String>,
        #[arg(long)]
        dry_run: bool,
    },
    /// Monte Carlo error rates of a code bundle.
    Simulate {
        #[arg(long)]
        code: PathBuf,
        #[arg(long)]
        source: Option<PathBuf>,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        /// Also report exact error probabilities by enumeration.
        #[arg(long)]
        exact: bool,
    },
    /// Secrecy capacity of a binary-input pair, or sampled achievable region points.
    Capacity {
        /// JSON object with `w_y` and `w_z` (a chain file works too).
        #[arg(long)]
        channels: PathBuf,
        #[arg(long, value_enum, default_value = "degraded")]
        mode: CapacityMode,
        #[arg(long, default_value_t = 1001)]
        grid: usize,
        #[arg(long, value_enum, default_value = "smc")]
        model: ModelArg,
        #[arg(long, default_value_t = 1)]
        u_size: usize,
        #[arg(long, default_value_t = 2)]
        v_size: usize,
        #[arg(long, default_value_t = 1)]
        t: usize,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
    /// Rate allocation and mixing-layer draw on top of a fixed base code.
    Construct {
        #[arg(long)]
        chain: PathBuf,
        /// Base code JSON: q, k0, b1_dim, b2_dim, codebook.
        #[arg(long, conflicts_with = "generator")]
        base: Option<PathBuf>,
        /// Generator matrix, one row of base-q digits per line.
        #[arg(long)]
        generator: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        q: u64,
        #[arg(long, default_value_t = 0)]
        k0: usize,
        #[arg(long, default_value_t = 0)]
        b1_dim: usize,
        /// Number of secrets.
        #[arg(long)]
        t: usize,
        /// ε_I per nonempty I in bitmask order, or one value for all.
        #[arg(long)]
        targets: String,
        #[arg(long)]
        eps2: f64,
        #[arg(long, default_value = "0.05:0.95:19")]
        rho_grid: String,
        /// Where to write the resulting code bundle.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Bound { .. } => "bound",
            Command::Exponent { .. } => "exponent",
            Command::ResolveCheck { .. } => "resolve-check",
            Command::Leakage { .. } => "leakage",
            Command::Simulate { .. } => "simulate",
            Command::Capacity { .. } => "capacity",
            Command::Construct { .. } => "construct",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        smc_core::exec::configure_threads(cli.threads);
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("smc {}: {e}", cli.command.name());
            ExitCode::from(e.exit_code())
        }
    }
}
