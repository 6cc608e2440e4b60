//! `corrsim`: risk sweeps, bound tables, inequality verification and
//! extreme-value tables.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or configuration
//! error. Tables go to standard output or `--out`; progress goes to
//! standard error.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use corrsim::protocols::Sampling;
use corrsim::sdpi::Suite;

use commands::{RunError, SampleCount, VerifyOptions, DEFAULT_MAXNORMAL_GRID};
use config::{ConfigError, ExperimentConfig, FileConfig, SchemeFlags, DEFAULT_SEED, DEFAULT_TRIALS};
use output::Format;

#[derive(Parser)]
#[command(name = "corrsim", version, about = "Correlation estimation under communication constraints")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo risk over a (scheme, k, rho) grid.
    Simulate(SimulateArgs),
    /// Closed-form risk references over a (k, rho) grid.
    Bounds(BoundsArgs),
    /// Randomized checks of the information inequalities.
    Verify(VerifyArgs),
    /// Mean and variance of the maximum of N standard normals.
    Maxnormal(MaxnormalArgs),
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeName {
    Naive,
    Max,
    Local,
    Block,
    #[value(name = "two_way", alias = "two-way")]
    TwoWay,
}

impl SchemeName {
    fn as_str(self) -> &'static str {
        match self {
            SchemeName::Naive => "naive",
            SchemeName::Max => "max",
            SchemeName::Local => "local",
            SchemeName::Block => "block",
            SchemeName::TwoWay => "two_way",
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    /// TOML experiment file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    scheme: Option<SchemeName>,
    /// Comma-separated bit budgets.
    #[arg(long, value_delimiter = ',')]
    k: Vec<u64>,
    /// Comma-separated true correlations.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    rho: Vec<f64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Run every protocol on materialized samples instead of the
    /// distributional samplers.
    #[arg(long)]
    full: bool,
    #[arg(long, allow_hyphen_values = true)]
    rho_nominal: Option<f64>,
    #[arg(long)]
    c_threshold: Option<f64>,
    #[arg(long)]
    c_bits: Option<f64>,
    #[arg(long)]
    rho_tilde: Option<f64>,
    #[arg(long)]
    n_block: Option<usize>,
    #[arg(long)]
    c_search: Option<f64>,
    #[arg(long)]
    c_col: Option<f64>,
    #[arg(long)]
    window_scale: Option<f64>,
    #[arg(long)]
    k1: Option<u64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    k: Vec<u64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    rho: Vec<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Sdpi,
    Tilted,
    Contraction,
    Tensor,
    Chain,
    Shift,
    Gaphamming,
    All,
}

impl SuiteArg {
    fn suites(self) -> Vec<Suite> {
        match self {
            SuiteArg::Sdpi => vec![Suite::Sdpi],
            SuiteArg::Tilted => vec![Suite::Tilted],
            SuiteArg::Contraction => vec![Suite::Contraction],
            SuiteArg::Tensor => vec![Suite::Tensor],
            SuiteArg::Chain => vec![Suite::Chain],
            SuiteArg::Shift => vec![Suite::Shift],
            SuiteArg::Gaphamming => vec![Suite::GapHamming],
            SuiteArg::All => Suite::ALL.to_vec(),
        }
    }
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum, required_unless_present = "replay")]
    suite: Option<SuiteArg>,
    /// Random instances per suite; each suite has its own default.
    #[arg(long)]
    draws: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Also check a deliberately corrupted joint, which must fail.
    #[arg(long)]
    inject_violation: bool,
    /// Re-check the instances stored in a JSON verify report.
    #[arg(long, conflicts_with_all = ["suite", "draws", "inject_violation"])]
    replay: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct MaxnormalArgs {
    /// Comma-separated sample counts, each an integer or `2^K`.
    #[arg(long = "n", value_delimiter = ',')]
    n: Vec<SampleCount>,
    #[command(flatten)]
    output: OutputArgs,
}

/// A grid flag wins over the file when it is given at all.
fn pick<T>(flag: Vec<T>, from_file: Option<Vec<T>>) -> Vec<T> {
    if flag.is_empty() {
        from_file.unwrap_or_default()
    } else {
        flag
    }
}

fn resolve_simulate(args: SimulateArgs) -> Result<ExperimentConfig, ConfigError> {
    let file = match &args.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let schemes = match args.scheme {
        Some(name) => {
            let flags = SchemeFlags {
                rho_nominal: args.rho_nominal,
                c_threshold: args.c_threshold,
                c_bits: args.c_bits,
                rho_tilde: args.rho_tilde,
                n_block: args.n_block,
                c_search: args.c_search,
                c_col: args.c_col,
                window_scale: args.window_scale,
                k1: args.k1,
            };
            vec![flags.build(name.as_str())?]
        }
        None => file.schemes,
    };
    Ok(ExperimentConfig {
        schemes,
        rho: pick(args.rho, file.rho),
        k: pick(args.k, file.k),
        trials: args.trials.or(file.trials).unwrap_or(DEFAULT_TRIALS),
        seed: args.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
        format: args.output.format.or(file.format).unwrap_or_default(),
        out: args.output.out.or(file.out),
        sampling: if args.full {
            Sampling::Full
        } else {
            file.sampling.unwrap_or_default()
        },
    })
}

fn run(cli: Cli) -> Result<bool, RunError> {
    match cli.command {
        Command::Simulate(args) => commands::simulate(&resolve_simulate(args)?),
        Command::Bounds(args) => commands::bounds(
            &args.k,
            &args.rho,
            args.output.format.unwrap_or_default(),
            args.output.out.as_deref(),
        ),
        Command::Verify(args) => {
            let format = args.output.format.unwrap_or_default();
            if let Some(path) = &args.replay {
                return commands::replay(path, format, args.output.out.as_deref());
            }
            let suite = args.suite.expect("clap requires --suite without --replay");
            commands::verify(&VerifyOptions {
                suites: suite.suites(),
                draws: args.draws,
                seed: args.seed,
                inject_violation: args.inject_violation,
                format,
                out: args.output.out.as_deref(),
            })
        }
        Command::Maxnormal(args) => {
            let grid = if args.n.is_empty() {
                DEFAULT_MAXNORMAL_GRID.to_vec()
            } else {
                args.n
            };
            commands::maxnormal(&grid, args.output.format.unwrap_or_default(), args.output.out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            let body = serde_json::json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
            eprintln!("{body}");
            ExitCode::from(2)
        }
    }
}
