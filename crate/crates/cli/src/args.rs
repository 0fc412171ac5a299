use std::path::PathBuf;

use age_cmpc::field::{PrimeField, MERSENNE_61};
use age_cmpc::PartitionScheme;
use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "age-cmpc", version, about = "Plan, sweep, run and validate AGE-coded multi-party matrix multiplication")]
pub struct Cli {
    /// Field modulus; must be prime and below 2^63.
    #[arg(long, env = "AGE_MPC_PRIME", global = true, default_value_t = MERSENNE_61)]
    pub prime: u64,

    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Output format; each subcommand has its own default.
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Worker counts for one (s, t, z), with the per-λ table and baselines.
    Plan(PlanArgs),
    /// Worker counts and costs for every divisor pair of st.
    Sweep(SweepArgs),
    /// Simulate the protocol on seeded random inputs and check the result.
    Run(RunArgs),
    /// Compare closed-form worker counts with exact product supports on a grid.
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SchemeArgs {
    #[arg(long)]
    pub s: u64,
    #[arg(long)]
    pub t: u64,
    #[arg(long)]
    pub z: u64,
    /// Gap parameter; defaults to the optimal one.
    #[arg(long)]
    pub lambda: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct PlanArgs {
    #[command(flatten)]
    pub scheme: SchemeArgs,
    /// Matrix dimension; adds predicted costs when given.
    #[arg(long)]
    pub m: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Product s·t held fixed across the sweep.
    #[arg(long)]
    pub st: u64,
    #[arg(long)]
    pub z: u64,
    #[arg(long)]
    pub m: u64,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub scheme: SchemeArgs,
    #[arg(long)]
    pub m: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of seeded-random workers answering the master.
    #[arg(long)]
    pub phase3_subset: Option<usize>,
    /// Use identity matrices for both inputs.
    #[arg(long)]
    pub identity: bool,
    /// Extra threshold-sized subsets to decode from.
    #[arg(long, default_value_t = 50)]
    pub subset_trials: usize,
    /// Write the full transcript as JSON to this path.
    #[arg(long)]
    pub transcript: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    #[arg(long, default_value_t = 6)]
    pub s_max: u64,
    #[arg(long, default_value_t = 6)]
    pub t_max: u64,
    #[arg(long, default_value_t = 20)]
    pub z_max: u64,
}

impl Cli {
    pub fn field(&self) -> Result<PrimeField> {
        PrimeField::new(self.prime).with_context(|| format!("invalid --prime {}", self.prime))
    }
}

impl SchemeArgs {
    /// Scheme with λ = 0 as a placeholder when no override is given.
    pub fn base(&self) -> Result<PartitionScheme> {
        PartitionScheme::new(self.s, self.t, self.z, self.lambda.unwrap_or(0))
            .with_context(|| format!("invalid scheme s={} t={} z={}", self.s, self.t, self.z))
    }
}
