//! Command-line front end. Every invocation is described by a [`RunConfig`]
//! that is echoed next to its outputs and can be replayed with `run`.

pub mod exec;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::ideal::WeightedPartition;
use crate::rational::{self, Rational};
use crate::systems::{MassRule, Policy};
use crate::verify::Format;

pub use exec::{execute, Artifact, Outcome};

/// Environment variable overriding the seed of any run.
pub const SEED_ENV: &str = "JN_LAB_SEED";

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFICATION_FAILED: i32 = 1;
pub const EXIT_SCHEMA: i32 = 2;
pub const EXIT_CONSTRUCTION: i32 = 3;

fn parse_rational(s: &str) -> Result<Rational, String> {
    rational::parse(s).map_err(|e| e.to_string())
}

#[derive(Parser, Debug)]
#[command(name = "jnlab", version, about = "Exact weak*-null sequences of finitely supported measures on the Cantor space")]
pub struct Cli {
    /// Seed for every random choice of the run (default fixed). Overrides the
    /// seed of a replayed config.
    #[arg(long, global = true, env = SEED_ENV)]
    pub seed: Option<u64>,

    /// Write the artifact here (CSV for .csv reports, JSON otherwise) and the
    /// config echo to PATH.config.json. Without it the artifact goes to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Subcommand, Debug)]
pub enum CliCommand {
    /// Build and check sequences of norm-one measures.
    Jn {
        #[command(subcommand)]
        cmd: JnCommand,
    },
    /// Inverse systems of simple extensions and their limits.
    Systems {
        #[command(subcommand)]
        cmd: SystemsCommand,
    },
    /// Pseudo-unions in the density ideal of a weighted partition of ω.
    Ideal {
        #[command(subcommand)]
        cmd: IdealCommand,
    },
    /// Check a dumped sequence: norms exactly 1 and, from the middle of the
    /// range on, |μ_n(U)| < tol for every test set U of the given depth.
    Verify(VerifyArgs),
    /// Convert a JSON report to CSV or JSON.
    Emit(EmitArgs),
    /// Replay a config echo.
    Run(RunArgs),
}

/// Options shared by the sequence builders.
#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct CheckArgs {
    /// Check the terms instead of dumping them; exit 1 if the check fails.
    #[arg(long)]
    #[serde(default)]
    pub verify: bool,
    /// Depth of the test sets.
    #[arg(long, default_value_t = 6)]
    pub depth: u32,
    /// Tolerance for |μ_n(U)| over the second half of the terms.
    #[arg(long, default_value = "1/10", value_parser = parse_rational)]
    #[serde(with = "rational::serde_str")]
    pub tol: Rational,
    /// Test family: cylinders, all-clopen, random:K or random:K:SEED.
    #[arg(long, default_value = "cylinders")]
    pub family: String,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MapKind {
    Identity,
    BitFlip,
    MergeHalves,
    CollapseRight,
    MergeQuarters,
    Random,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DisjointInput {
    /// ½(δ_{0^n 1^ω} − δ_{0^ω})
    Scattered,
    /// the standard sequence
    Standard,
}

#[derive(Subcommand, Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum JnCommand {
    /// μ_n = 2^-(n+1) Σ_{s ∈ 2^n} (δ_{s1^ω} − δ_{s0^ω}), terms n = 0..N−1.
    Standard {
        #[arg(long, default_value_t = 12)]
        n: usize,
        #[command(flatten)]
        check: CheckArgs,
    },
    /// μ_n(A) = λ(A ∩ B_n) − λ(A ∖ B_n) with B_n = {x : x(n) = 1}, n = 0..N−1.
    Independent {
        #[arg(long, default_value_t = 12)]
        n: usize,
        #[command(flatten)]
        check: CheckArgs,
    },
    /// μ_n = ½(δ_{0^n 1^ω} − δ_{0^ω}), n = 0..N−1.
    Scattered {
        #[arg(long, default_value_t = 32)]
        n: usize,
        /// Bits on which the second half of the points must match the limit.
        #[arg(long, default_value_t = 8)]
        converge_depth: u32,
        #[command(flatten)]
        check: CheckArgs,
    },
    /// Normalized differences of empirical averages of van der Corput points
    /// over the cells P_n = [2^n − 1, 2^(n+1) − 2], n = 1..N.
    Uds {
        #[arg(long, default_value_t = 12)]
        n: usize,
        #[command(flatten)]
        check: CheckArgs,
    },
    /// ν_n = 2^-(n+1) Σ_s (δ_{y_s^1} − δ_{y_s^0}) with y_s^i a preimage of s i^ω under a tree map.
    Transport {
        #[arg(long, value_enum, default_value = "identity")]
        map: MapKind,
        /// Working depth of the tree map.
        #[arg(long, default_value_t = 10)]
        map_depth: u32,
        #[arg(long, default_value_t = 8)]
        n: usize,
        #[command(flatten)]
        check: CheckArgs,
    },
    /// Pass a weak*-null sequence to a disjointly supported one via
    /// θ_k ∝ μ_{n_2k}↾A_2k − μ_{n_2k+1}↾A_2k+1.
    Disjointify {
        #[arg(long, value_enum, default_value = "scattered")]
        input: DisjointInput,
        #[arg(long, default_value_t = 32)]
        horizon: usize,
        /// Weights closer than this count as equal.
        #[arg(long, default_value = "1/1000", value_parser = parse_rational)]
        #[serde(with = "rational::serde_str")]
        tol: Rational,
    },
    /// Cut the countably supported term n to a finite head with tail below 1/n
    /// and normalize, n = 1..N.
    Truncate {
        #[arg(long, default_value_t = 8)]
        n: usize,
        #[command(flatten)]
        check: CheckArgs,
    },
}

/// Where a system comes from.
#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct SystemSource {
    /// round-robin, fixed-point, subtree:WORD or custom:I,J,...
    #[arg(long, default_value = "round-robin")]
    pub policy: Policy,
    #[arg(long, default_value_t = 64)]
    pub steps: usize,
    /// Load a system {policy, splits} from JSON instead.
    #[arg(long)]
    pub system: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SystemsCommand {
    /// Run a split policy; each step doubles one point of K_t.
    Build {
        #[command(flatten)]
        source: SystemSource,
    },
    /// Look for a full binary subtree (perfect part) or a run of one-sided
    /// splits (convergent sequence) within the budget.
    Classify {
        #[command(flatten)]
        source: SystemSource,
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Classify, then build ½(δ_{x_n} − δ_x) on a convergent sequence or the
    /// uniformly distributed construction on the perfect part, and check it.
    Pipeline {
        #[command(flatten)]
        source: SystemSource,
        #[arg(long)]
        budget: Option<usize>,
        /// Levels below the perfect root used by the greedy points.
        #[arg(long, default_value_t = 14)]
        depth: u32,
        #[arg(long, default_value_t = 12)]
        terms: usize,
        #[arg(long, default_value_t = 6)]
        verify_depth: u32,
        #[arg(long, default_value = "1/10", value_parser = parse_rational)]
        #[serde(with = "rational::serde_str")]
        tol: Rational,
        /// half-half or proportional:P/Q
        #[arg(long, default_value = "half-half")]
        rule: MassRule,
    },
}

#[derive(Subcommand, Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum IdealCommand {
    /// C = ⋃_{k<K} (C_k ∖ ⋃_{j≤n_k} A_j) with n_k the least n > n_{k−1} where
    /// Σ_{i≤k} ε_i(n) < 1/(k+1); the result is verified up to the horizon.
    PseudoUnion {
        /// blocks:m=M or pairs
        #[arg(long, default_value = "blocks:m=8")]
        partition: WeightedPartition,
        /// JSON file {"sets": [{"members": …, "certificate": …}, …]}
        #[arg(long)]
        sets: PathBuf,
        #[arg(long, default_value_t = 20)]
        k: usize,
        #[arg(long, default_value_t = 4096)]
        horizon: u64,
    },
    /// Check C_k ∖ C ⊆ ⋃_{j≤n_k} A_j and ratio(C, n) < 1/(k+1) on (n_k, n_{k+1}]
    /// for a pseudo-union output.
    Verify {
        #[arg(long, default_value = "blocks:m=8")]
        partition: WeightedPartition,
        #[arg(long)]
        sets: PathBuf,
        /// Output of pseudo-union.
        #[arg(long)]
        union: PathBuf,
        /// Replace the schedule, e.g. 0,1,16,47.
        #[arg(long)]
        schedule: Option<String>,
        #[arg(long, default_value_t = 4096)]
        horizon: u64,
    },
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct VerifyArgs {
    /// A sequence dump written by a jn command without --verify.
    #[arg(long)]
    pub input: PathBuf,
    /// Number of terms to check (all by default).
    #[arg(long)]
    pub terms: Option<usize>,
    #[command(flatten)]
    pub check: CheckArgs,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct EmitArgs {
    /// A JSON report.
    #[arg(long)]
    pub input: PathBuf,
    /// csv or json; taken from the --out extension when absent, JSON on stdout.
    #[arg(long)]
    pub format: Option<Format>,
}

#[derive(Args, Clone, Debug)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "command", content = "args", rename_all = "kebab-case")]
pub enum Command {
    Jn(JnCommand),
    Systems(SystemsCommand),
    Ideal(IdealCommand),
    Verify(VerifyArgs),
    Emit(EmitArgs),
}

/// Everything a run depends on.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub out: Option<PathBuf>,
    #[serde(flatten)]
    pub command: Command,
}

impl RunConfig {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configs serialize") + "\n"
    }
}

/// Maps a library error to the process exit status.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse(_) | Error::Json(_) | Error::Csv(_) | Error::Io(_) => EXIT_SCHEMA,
        _ => EXIT_CONSTRUCTION,
    }
}

fn config_path(out: &std::path::Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".config.json");
    PathBuf::from(s)
}

/// Resolves the invocation into a config.
pub fn config_from_cli(cli: Cli) -> Result<RunConfig, Error> {
    let command = match cli.command {
        CliCommand::Jn { cmd } => Command::Jn(cmd),
        CliCommand::Systems { cmd } => Command::Systems(cmd),
        CliCommand::Ideal { cmd } => Command::Ideal(cmd),
        CliCommand::Verify(a) => Command::Verify(a),
        CliCommand::Emit(a) => Command::Emit(a),
        CliCommand::Run(r) => {
            let mut cfg: RunConfig = serde_json::from_str(&std::fs::read_to_string(&r.config)?)?;
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            if cli.out.is_some() {
                cfg.out = cli.out;
            }
            return Ok(cfg);
        }
    };
    Ok(RunConfig { seed: cli.seed.unwrap_or(crate::DEFAULT_SEED), out: cli.out, command })
}

/// Executes a config, writing the artifact and the config echo. Returns the
/// exit status.
pub fn run(cfg: &RunConfig, stdout: &mut dyn std::io::Write) -> Result<i32, Error> {
    let outcome = execute(cfg)?;
    match &cfg.out {
        Some(path) => {
            let format = outcome.format.unwrap_or_else(|| Format::for_path(path));
            std::fs::write(path, outcome.artifact.render(format)?)?;
            std::fs::write(config_path(path), cfg.to_json())?;
        }
        None => stdout.write_all(outcome.artifact.render(outcome.format.unwrap_or(Format::Json))?.as_bytes())?,
    }
    Ok(match outcome.passed {
        Some(false) => EXIT_VERIFICATION_FAILED,
        _ => EXIT_OK,
    })
}

/// Entry point of the binary.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_SCHEMA } else { EXIT_OK };
        }
    };
    let result = config_from_cli(cli).and_then(|cfg| run(&cfg, &mut std::io::stdout().lock()));
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
