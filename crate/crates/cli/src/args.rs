use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "maxload", version, about = "Max-load experiments for linear and multiply-shift hashing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate one hash function on one key and print the bucket.
    Eval(EvalArgs),
    /// Monte Carlo distribution of the max load.
    Maxload(TrialArgs),
    /// Tail probabilities Pr[M >= ceil(4 alpha)] with Wilson intervals.
    Tail(TrialArgs),
    /// Mean max load over a grid of n with m = n, plus a log-log fit.
    Scaling(ScalingArgs),
    /// Exact distribution of M over every (a, b) of the linear family.
    Exhaustive(ExhaustiveArgs),
    /// Check one lemma instance, or run a seeded campaign of generated ones.
    LemmaCheck(LemmaArgs),
    /// Write a key set, one key per line.
    Genkeys(GenkeysArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    #[value(alias = "linear-mod-p")]
    Linear,
    #[value(alias = "multiply-shift")]
    Ms,
    #[value(alias = "fully-random")]
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum KeysetKind {
    Interval,
    #[value(alias = "arithmetic-progression")]
    Ap,
    #[value(alias = "grid-sumset")]
    Grid,
    #[value(alias = "uniform-random")]
    Uniform,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args, Serialize)]
pub struct CommonArgs {
    /// Worker threads (defaults to all cores).
    #[arg(long, env = "MAXLOAD_THREADS")]
    #[serde(skip)]
    pub threads: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write here instead of standard output.
    #[arg(long, short)]
    #[serde(skip)]
    pub output: Option<PathBuf>,
    /// Recompute and compare against a previous output of the same command.
    #[arg(long, value_name = "PRIOR")]
    #[serde(skip)]
    pub verify: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct FamilyArgs {
    #[arg(long, value_enum)]
    pub family: FamilyKind,
    /// Prime modulus (linear).
    #[arg(long)]
    pub p: Option<u64>,
    /// Table size (linear, random).
    #[arg(long)]
    pub m: Option<u64>,
    /// Word size: keys live in [2^r] (multiply-shift).
    #[arg(long)]
    pub r: Option<u32>,
    /// Output bits: m = 2^l (multiply-shift).
    #[arg(long)]
    pub l: Option<u32>,
}

#[derive(Debug, Args, Serialize)]
pub struct KeyArgs {
    #[arg(long, value_enum, default_value_t = KeysetKind::Uniform)]
    pub keyset: KeysetKind,
    /// Number of keys.
    #[arg(long)]
    pub n: Option<u64>,
    /// Keys are drawn from [universe]; defaults to the family's universe.
    #[arg(long)]
    pub universe: Option<u64>,
    /// First key (interval, progression).
    #[arg(long, default_value_t = 0)]
    pub start: u64,
    /// Step (progression) or row offset (grid).
    #[arg(long)]
    pub stride: Option<u64>,
    /// Grid rows.
    #[arg(long)]
    pub n1: Option<u64>,
    /// Grid row length.
    #[arg(long)]
    pub n2: Option<u64>,
    /// Seed for uniform key sets.
    #[arg(long, default_value_t = 1)]
    pub key_seed: u64,
    /// Read keys from a file (one per line, '#' comments).
    #[arg(long, value_name = "PATH", conflicts_with = "keys")]
    pub keys_file: Option<PathBuf>,
    /// Explicit comma-separated keys.
    #[arg(long, value_delimiter = ',')]
    pub keys: Option<Vec<u64>>,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    #[arg(long, value_enum)]
    pub family: FamilyKind,
    #[arg(long)]
    pub p: Option<u64>,
    #[arg(long)]
    pub m: Option<u64>,
    #[arg(long)]
    pub r: Option<u32>,
    #[arg(long)]
    pub l: Option<u32>,
    #[arg(long)]
    pub a: u64,
    #[arg(long, default_value_t = 0)]
    pub b: u64,
    #[arg(long)]
    pub x: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct TrialArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    #[command(flatten)]
    pub keys: KeyArgs,
    /// Number of trials T.
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    /// Base seed; trial i uses a seed derived from (seed, i).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Alpha values for Pr[M >= ceil(4 alpha)].
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 2.0, 4.0, 8.0])]
    pub alpha: Vec<f64>,
    /// Replace every sampled multiplier by this value (linear only).
    #[arg(long)]
    pub force_a: Option<u64>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct ScalingArgs {
    #[arg(long, value_enum)]
    pub family: FamilyKind,
    /// Key universe (linear, random).
    #[arg(long, default_value_t = 1 << 31)]
    pub universe: u64,
    /// Word size (multiply-shift).
    #[arg(long, default_value_t = 32)]
    pub r: u32,
    #[arg(long, value_enum, default_value_t = KeysetKind::Uniform)]
    pub keyset: KeysetKind,
    /// Seed for uniform key sets (mixed with n per row).
    #[arg(long, default_value_t = 1)]
    pub key_seed: u64,
    /// Comma-separated values of n.
    #[arg(long, value_delimiter = ',', default_values_t = [256, 1024, 4096, 16384, 65536])]
    pub grid: Vec<u64>,
    #[arg(long, default_value_t = 200)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fit planted rows mean = n^exponent instead of running trials.
    #[arg(long)]
    pub synthetic_selftest: bool,
    #[arg(long, default_value_t = 0.5, requires = "synthetic_selftest")]
    pub exponent: f64,
    /// Also write every trial as CSV to this path.
    #[arg(long, value_name = "PATH")]
    #[serde(skip)]
    pub trials_csv: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct ExhaustiveArgs {
    #[arg(long)]
    pub p: u64,
    #[arg(long)]
    pub m: u64,
    #[command(flatten)]
    pub keys: KeyArgs,
    /// Enumerate only a != 0.
    #[arg(long)]
    pub nonzero_a: bool,
    /// Refuse p above this.
    #[arg(long)]
    pub guard: Option<u64>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct LemmaArgs {
    /// Check this instance file instead of running a campaign.
    #[arg(long, value_name = "PATH")]
    pub instance: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    pub instances: u64,
    #[arg(long, default_value_t = 10_000)]
    pub r_max: u64,
    #[arg(long, default_value_t = 2)]
    pub m_min: u64,
    #[arg(long, default_value_t = 8)]
    pub m_max: u64,
    #[arg(long, default_value_t = 0x1e44_a001)]
    pub seed: u64,
    /// Directory for counterexample dumps.
    #[arg(long, value_name = "DIR", default_value = ".")]
    #[serde(skip)]
    pub dump_dir: PathBuf,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct GenkeysArgs {
    #[command(flatten)]
    pub keys: KeyArgs,
    /// Write here instead of standard output.
    #[arg(long, short)]
    #[serde(skip)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}
