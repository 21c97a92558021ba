use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use growth_core::env::{EnvConfig, RadiusLaw};

#[derive(Parser, Debug)]
#[command(name = "growth", version, about = "Continuum competing growth: passage times, subadditivity and coexistence experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Validate a radius law and print its report.
    #[command(args_override_self = true)]
    EnvCheck(EnvCheckArgs),
    /// Passage times T_{x,y} over independent environments.
    #[command(args_override_self = true)]
    Passage(PassageArgs),
    /// Time-constant estimate from T_{0,n}/n.
    #[command(args_override_self = true)]
    Mu(MuArgs),
    /// Coupled triples on shared environments; fails on any violation.
    #[command(args_override_self = true)]
    Subadd(SubaddArgs),
    /// Coupled differences T_{n,-m} - T_{0,-m}.
    #[command(args_override_self = true)]
    Diff(DiffArgs),
    /// Two-type coexistence table.
    #[command(args_override_self = true)]
    Coexist(CoexistArgs),
    /// Engine against the direct simulator; fails when p < 0.001.
    #[command(args_override_self = true)]
    OracleCompare(OracleArgs),
    /// Re-run an experiment from its manifest.
    #[command(args_override_self = true)]
    Rerun(RerunArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum LawKind {
    Dirac,
    Uniform,
    Exponential,
    Truncexp,
}

#[derive(Args, Debug, Clone)]
pub struct LawArgs {
    /// Radius law family (default depends on the command).
    #[arg(long, value_enum)]
    pub law: Option<LawKind>,
    /// Dirac radius.
    #[arg(long, default_value_t = 1.0)]
    pub r: f64,
    /// Uniform (a, b] lower end.
    #[arg(long, default_value_t = 0.0)]
    pub a: f64,
    /// Uniform (a, b] upper end.
    #[arg(long, default_value_t = 1.0)]
    pub b: f64,
    /// Exponential rate.
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    /// Truncation point of the truncated exponential.
    #[arg(long, default_value_t = 1.0)]
    pub cap: f64,
}

impl LawArgs {
    pub fn kind(&self, fallback: LawKind) -> LawKind {
        self.law.unwrap_or(fallback)
    }

    pub fn build(&self, fallback: LawKind) -> RadiusLaw {
        match self.kind(fallback) {
            LawKind::Dirac => RadiusLaw::Dirac { r: self.r },
            LawKind::Uniform => RadiusLaw::UniformHalfOpen { a: self.a, b: self.b },
            LawKind::Exponential => RadiusLaw::Exponential { beta: self.beta },
            LawKind::Truncexp => RadiusLaw::TruncatedExponential {
                beta: self.beta,
                cap: self.cap,
            },
        }
    }
}

pub fn law_name(kind: LawKind) -> &'static str {
    match kind {
        LawKind::Dirac => "dirac",
        LawKind::Uniform => "uniform",
        LawKind::Exponential => "exponential",
        LawKind::Truncexp => "truncexp",
    }
}

#[derive(Args, Debug, Clone)]
pub struct EnvArgs {
    /// Dimension.
    #[arg(long = "d", default_value_t = 2)]
    pub d: usize,
    /// Environment rate (default 1, or the larger type rate for coexist).
    #[arg(long)]
    pub lambda: Option<f64>,
    #[command(flatten)]
    pub law: LawArgs,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub cell_edge: f64,
    #[arg(long, default_value_t = 1.0)]
    pub slab_height: f64,
}

impl EnvArgs {
    pub fn config(&self, rate: f64, fallback: LawKind) -> EnvConfig {
        EnvConfig {
            dim: self.d,
            rate,
            seed: self.seed,
            cell_edge: self.cell_edge,
            slab_height: self.slab_height,
            law: self.law.build(fallback),
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    /// Worker threads; results are ordered by replication regardless.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Coverage tolerance.
    #[arg(long, default_value_t = 1.0e-3)]
    pub delta: f64,
    /// Flat `key = value` file; flags given on the command line win.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EnvCheckArgs {
    #[command(flatten)]
    pub law: LawArgs,
}

#[derive(Args, Debug)]
pub struct PassageArgs {
    #[command(flatten)]
    pub env: EnvArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// Start point, comma separated (default origin).
    #[arg(long)]
    pub x: Option<String>,
    /// Target point, comma separated.
    #[arg(long)]
    pub y: String,
}

#[derive(Args, Debug)]
pub struct MuArgs {
    #[command(flatten)]
    pub env: EnvArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// Separations, comma separated.
    #[arg(long, default_value = "10,20")]
    pub n_list: String,
    #[arg(long, default_value_t = 0.95)]
    pub confidence: f64,
}

#[derive(Args, Debug)]
pub struct SubaddArgs {
    #[command(flatten)]
    pub env: EnvArgs,
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long)]
    pub x: String,
    #[arg(long)]
    pub z: String,
    #[arg(long)]
    pub y: String,
    /// Inclusion probes per triple.
    #[arg(long, default_value_t = 100)]
    pub probes: usize,
}

#[derive(Args, Debug)]
pub struct DiffArgs {
    #[command(flatten)]
    pub env: EnvArgs,
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, default_value_t = 4)]
    pub n: u32,
    #[arg(long, default_value = "8,16,24")]
    pub m_list: String,
    #[arg(long, default_value_t = 0.25)]
    pub epsilon: f64,
    /// Time constant to test the differences against.
    #[arg(long)]
    pub mu_hat: Option<f64>,
    #[arg(long, default_value_t = 0.9)]
    pub confidence: f64,
    /// Number of increments in the telescoping check (0 skips it).
    #[arg(long, default_value_t = 3)]
    pub k: u32,
}

#[derive(Args, Debug)]
pub struct CoexistArgs {
    #[command(flatten)]
    pub env: EnvArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// Seed separation.
    #[arg(long, default_value_t = 8.0)]
    pub n: f64,
    #[arg(long, default_value = "5,10,15")]
    pub k_list: String,
    #[arg(long, default_value_t = 1.0)]
    pub lambda1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda2: f64,
    #[arg(long, default_value_t = 0.95)]
    pub confidence: f64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScenarioKind {
    /// Engine against the direct simulator.
    Standard,
    /// Engine against itself on unrelated environments.
    #[value(name = "self")]
    SelfCheck,
    /// Direct simulator at twice the rate; the test should reject.
    Mismatch,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    #[command(flatten)]
    pub env: EnvArgs,
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, value_enum, default_value_t = ScenarioKind::Standard)]
    pub scenario: ScenarioKind,
    #[arg(long, default_value_t = 4.0)]
    pub distance: f64,
    /// Box margin of the direct simulator.
    #[arg(long, default_value_t = 30.0)]
    pub margin: f64,
}

#[derive(Args, Debug)]
pub struct RerunArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Write outputs here instead of the recorded directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub jobs: Option<usize>,
}

pub fn parse_point(text: &str, dim: usize) -> Result<Vec<f64>, String> {
    let v = parse_list(text)?;
    if v.len() != dim {
        return Err(format!("point {text:?} has {} coordinates, expected {dim}", v.len()));
    }
    Ok(v)
}

pub fn parse_list<F: std::str::FromStr>(text: &str) -> Result<Vec<F>, String> {
    let v = text
        .split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<F>().map_err(|_| format!("cannot parse {s:?} in list {text:?}")))
        .collect::<Result<Vec<F>, String>>()?;
    if v.is_empty() {
        return Err(format!("empty list {text:?}"));
    }
    Ok(v)
}
