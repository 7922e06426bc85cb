use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use momtail_core::rational::parse_rational;
use momtail_core::Rational;

fn rational(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

#[derive(Debug, Parser)]
#[command(
    name = "momtail",
    version,
    about = "Exact moment sequences and tail-order tools"
)]
pub struct Cli {
    /// JSON file with precision budgets, search caps and default depths.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Moment table of a measure as CSV (`k,value,error_radius,exact`).
    Moments {
        measure: PathBuf,
        #[arg(long, default_value_t = 20)]
        k_max: u64,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tail-order verdict of the first measure against the second.
    Compare {
        first: PathBuf,
        second: PathBuf,
        /// Prefix depth for the empirical scan (defaults to the config value).
        #[arg(long)]
        depth: Option<u64>,
        /// `piecewise`, `cdf:X0` or `density:X0`.
        #[arg(long)]
        certify: Option<String>,
    },
    /// Build and verify a construction; writes a replayable artifact.
    Construct {
        #[command(subcommand)]
        kind: ConstructKind,
        #[command(flatten)]
        out: ConstructOutput,
    },
    /// Set queries: theta, filter membership, sequence certificates, FIP.
    Filters {
        #[command(subcommand)]
        query: FilterQuery,
    },
    /// Distribution-valued game analysis.
    Game {
        #[command(subcommand)]
        action: GameAction,
    },
    /// Replay an artifact: re-verify its payload and rebuild it.
    Verify { artifact: PathBuf },
}

#[derive(Debug, Args)]
pub struct ConstructOutput {
    /// Artifact path (stdout when omitted).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Summary table as CSV.
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
    /// Whitespace-separated numeric columns for plotting.
    #[arg(long, global = true)]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Interval {
    #[arg(long, value_parser = rational, default_value = "1")]
    pub a: Rational,
    #[arg(long, value_parser = rational, default_value = "2")]
    pub b: Rational,
    /// Polynomial bump exponent.
    #[arg(long, default_value_t = 4)]
    pub bump_degree: u32,
}

#[derive(Debug, Subcommand)]
pub enum ConstructKind {
    /// Signed density with moments `0..=n` equal to zero.
    Kernel {
        #[command(flatten)]
        interval: Interval,
        #[arg(long, default_value_t = 12)]
        n: u64,
    },
    /// Kernel with vanishing moments at a sparse increasing set of orders.
    Staged {
        #[command(flatten)]
        interval: Interval,
        #[arg(long, default_value_t = 6)]
        stages: usize,
    },
    /// Two different probability densities with matching moments at the staged orders.
    Matched {
        #[command(flatten)]
        interval: Interval,
        #[arg(long, default_value_t = 4)]
        stages: usize,
    },
    /// Probability densities whose moment difference alternates in sign.
    Alternating {
        #[command(flatten)]
        interval: Interval,
        #[arg(long, default_value_t = 5)]
        stages: usize,
    },
    /// Alternating pair with one-peaked densities.
    Unimodal {
        #[command(flatten)]
        interval: Interval,
        #[arg(long, default_value_t = 3)]
        stages: usize,
    },
    /// Two comparable densities whose even mixture alternates.
    Mixed {
        #[command(flatten)]
        interval: Interval,
        #[arg(long, default_value_t = 5)]
        stages: usize,
    },
    /// Alternating pair with sign runs `[l, 2l]` and their harmonic sums.
    Runs {
        #[command(flatten)]
        interval: Interval,
        #[arg(long, default_value_t = 3)]
        stages: usize,
    },
    /// Discrete measures with alternating distribution functions.
    DiscreteCdf {
        #[arg(long, value_parser = rational, default_value = "7/5")]
        a: Rational,
        #[arg(long, default_value_t = 40)]
        truncation: u64,
        /// CDF alternation checked for `k = 1..=k_max`.
        #[arg(long, default_value_t = 20)]
        k_max: u64,
        #[arg(long, default_value_t = 100)]
        moment_depth: u64,
    },
    /// Absolutely continuous version of the discrete pair.
    AcCdf {
        #[arg(long, value_parser = rational, default_value = "7/5")]
        a: Rational,
        #[arg(long, default_value_t = 10)]
        k_max: u64,
        #[arg(long, default_value_t = 4)]
        bump_degree: u32,
    },
}

#[derive(Debug, Subcommand)]
pub enum FilterQuery {
    /// Harmonic measure of a set expression.
    Theta { expr: String },
    /// Membership in the filter of cofinite sets.
    Frechet { expr: String },
    /// Membership in the Müntz-Szász filter and the set's own verdict.
    Msz { expr: String },
    /// Certificate for an explicit increasing sequence (JSON list or
    /// `{"prefix": [...], "runs": [[start, end], ...]}`).
    MszSeq { file: PathBuf },
    /// Finite intersection property of a family of set expressions.
    Fip {
        #[arg(required = true)]
        exprs: Vec<String>,
    },
}

#[derive(Debug, Subcommand)]
pub enum GameAction {
    /// Existence analysis with a replayable certificate.
    Analyze { game: PathBuf },
    /// Check a profile given as `{"row": [...], "column": [...]}` (inline JSON or a file).
    Check {
        game: PathBuf,
        #[arg(long)]
        profile: String,
    },
    /// Real-valued game of one outcome coordinate (1-based).
    Project {
        game: PathBuf,
        #[arg(long)]
        i: usize,
        /// Emit the matrix as JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Exhaustive search over rational profiles with bounded denominators.
    Grid {
        game: PathBuf,
        #[arg(long, default_value_t = 50)]
        max_den: u64,
    },
    /// Print the payoff table.
    Show { game: PathBuf },
}
