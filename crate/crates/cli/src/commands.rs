//! The four subcommands. Each builds a [`Table`] and returns whether the
//! run counts as a success.

use std::path::Path;

use corrsim::info::risk_bounds;
use corrsim::protocols::{asymptotic_max_normal, estimate_risk_fn, max_normal_moments, max_normal_moments_pow2};
use corrsim::rng::derive_seed;
use corrsim::sdpi::{run_injected_fixture, run_suite, Instance, Suite, SuiteSummary, Violation};
use serde_json::{Map, Value as Json};

use crate::config::{ConfigError, ExperimentConfig};
use crate::output::{emit, to_csv, to_json, Cell, Format, Table};

/// A failure that is not a verification outcome; exit code 2.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Library(#[from] corrsim::Error),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot read replay file: {0}")]
    Replay(String),
}

impl RunError {
    pub fn kind(&self) -> &'static str {
        match self {
            RunError::Config(_) => "config",
            RunError::Library(_) => "runtime",
            RunError::Io(_) => "io",
            RunError::Replay(_) => "replay",
        }
    }
}

fn write(table: &Table, format: Format, out: Option<&Path>, command: &str, seed: Option<u64>, extra: Map<String, Json>) -> Result<(), RunError> {
    let text = match format {
        Format::Csv => to_csv(table),
        Format::Json => to_json(table, command, seed, extra),
    };
    emit(&text, out)?;
    Ok(())
}

const BOUND_COLUMNS: [&str; 5] = ["global_upper", "local_upper", "local_lower", "naive_risk", "max_scheme_risk"];

fn bound_cells(k: u64, rho: f64) -> Result<Vec<Cell>, RunError> {
    let b = risk_bounds(k, rho)?;
    Ok(vec![
        b.global_upper.into(),
        b.local_upper.into(),
        b.local_lower.into(),
        b.naive_risk.into(),
        b.max_scheme_risk.into(),
    ])
}

pub fn simulate(cfg: &ExperimentConfig) -> Result<bool, RunError> {
    let cells = cfg.prepare()?;
    let mut columns = vec![
        "scheme",
        "k",
        "rho",
        "trials",
        "mse",
        "bias",
        "variance",
        "ci95",
        "mean_estimate",
        "raw_mse",
        "raw_mean",
        "decode_failure_rate",
        "search_failure_rate",
        "wrong_decode_rate",
        "mean_bits",
        "max_bits",
    ];
    columns.extend(BOUND_COLUMNS);
    let mut table = Table::new(columns);
    let total = cells.len();
    for (i, cell) in cells.iter().enumerate() {
        eprintln!("simulate [{}/{total}] {} k={} rho={}", i + 1, cell.name, cell.k, cell.rho);
        let tag = format!("cell:{}:{}:{}:{:016x}", cell.scheme_index, cell.name, cell.k, cell.rho.to_bits());
        let seed = derive_seed(cfg.seed, &tag, 0);
        let r = estimate_risk_fn(cell.rho, cell.k, cfg.trials, seed, |rng| {
            cell.prepared.run_trial(cell.rho, cfg.sampling, rng)
        })?;
        let mut row: Vec<Cell> = vec![
            cell.name.into(),
            cell.k.into(),
            cell.rho.into(),
            r.trials.into(),
            r.mse.into(),
            r.bias.into(),
            r.variance.into(),
            r.ci95_halfwidth.into(),
            r.mean_estimate.into(),
            r.raw.mse.into(),
            r.raw.mean.into(),
            r.decode_failure_rate.into(),
            r.search_failure_rate.into(),
            r.wrong_decode_rate.into(),
            r.mean_bits.into(),
            r.max_bits.into(),
        ];
        row.extend(bound_cells(cell.k, cell.rho)?);
        table.push(row);
    }
    write(&table, cfg.format, cfg.out.as_deref(), "simulate", Some(cfg.seed), Map::new())?;
    Ok(true)
}

pub fn bounds(k: &[u64], rho: &[f64], format: Format, out: Option<&Path>) -> Result<bool, RunError> {
    if k.is_empty() || rho.is_empty() {
        return Err(ConfigError::Invalid("empty grid".into()).into());
    }
    if k.contains(&0) {
        return Err(ConfigError::Invalid("k must be at least 1".into()).into());
    }
    let mut ks = k.to_vec();
    ks.sort_unstable();
    let mut rhos = rho.to_vec();
    rhos.sort_by(f64::total_cmp);
    let mut columns = vec!["k", "rho"];
    columns.extend(BOUND_COLUMNS);
    let mut table = Table::new(columns);
    for &kk in &ks {
        for &r in &rhos {
            let mut row: Vec<Cell> = vec![kk.into(), r.into()];
            row.extend(bound_cells(kk, r)?);
            table.push(row);
        }
    }
    write(&table, format, out, "bounds", None, Map::new())?;
    Ok(true)
}

/// Draw counts used when `--draws` is absent.
pub fn default_draws(suite: Suite) -> u64 {
    match suite {
        Suite::Sdpi | Suite::Tilted | Suite::Contraction => 10_000,
        Suite::Tensor => 500,
        Suite::Chain => 200,
        Suite::Shift | Suite::GapHamming => 100,
    }
}

fn stats_text(s: &SuiteSummary) -> String {
    s.stats
        .iter()
        .map(|(k, v)| format!("{k}={}", crate::output::format_float(*v)))
        .collect::<Vec<_>>()
        .join(";")
}

pub struct VerifyOptions<'a> {
    pub suites: Vec<Suite>,
    pub draws: Option<u64>,
    pub seed: u64,
    pub inject_violation: bool,
    pub format: Format,
    pub out: Option<&'a Path>,
}

pub fn verify(opts: &VerifyOptions<'_>) -> Result<bool, RunError> {
    let mut summaries = Vec::new();
    for &suite in &opts.suites {
        let draws = opts.draws.unwrap_or_else(|| default_draws(suite));
        if draws == 0 {
            eprintln!("warning: suite {suite} has zero draws; passing vacuously");
        }
        eprintln!("verify {suite}: {draws} draws");
        summaries.push(run_suite(suite, draws, derive_seed(opts.seed, suite.name(), 0))?);
    }
    if opts.inject_violation {
        eprintln!("verify injected: corrupted joint fixture");
        summaries.push(run_injected_fixture()?);
    }
    let mut table = Table::new(vec!["suite", "draws", "passed", "failed", "worst_margin", "stats"]);
    let mut violations: Vec<Violation> = Vec::new();
    for s in &summaries {
        table.push(vec![
            s.suite.clone().into(),
            s.draws.into(),
            s.passed.into(),
            s.failed.into(),
            s.worst_margin.map_or(Cell::Text(String::new()), Cell::Float),
            stats_text(s).into(),
        ]);
        violations.extend(s.violations.iter().cloned());
        eprintln!("{}: {}/{} passed", s.suite, s.passed, s.draws);
    }
    let ok = summaries.iter().all(SuiteSummary::ok);
    if !violations.is_empty() && opts.format == Format::Csv {
        eprintln!("{} violation(s) recorded; use --format json to obtain replayable instances", violations.len());
    }
    let mut extra = Map::new();
    extra.insert(
        "violations".into(),
        serde_json::to_value(&violations).map_err(|e| RunError::Replay(e.to_string()))?,
    );
    write(&table, opts.format, opts.out, "verify", Some(opts.seed), extra)?;
    Ok(ok)
}

/// Re-checks instances from a verify JSON report, a single violation or a
/// bare instance.
pub fn replay(path: &Path, format: Format, out: Option<&Path>) -> Result<bool, RunError> {
    let text = std::fs::read_to_string(path).map_err(|e| RunError::Replay(e.to_string()))?;
    let value: Json = serde_json::from_str(&text).map_err(|e| RunError::Replay(e.to_string()))?;
    let parse = |v: Json| -> Result<Violation, RunError> {
        serde_json::from_value::<Violation>(v.clone()).or_else(|_| {
            serde_json::from_value::<Instance>(v)
                .map(|instance| Violation {
                    suite: "instance".into(),
                    index: 0,
                    margin: f64::NAN,
                    instance,
                })
                .map_err(|e| RunError::Replay(e.to_string()))
        })
    };
    let items: Vec<Violation> = match value {
        Json::Object(ref m) if m.contains_key("violations") => {
            let list = m["violations"].as_array().cloned().unwrap_or_default();
            list.into_iter().map(parse).collect::<Result<_, _>>()?
        }
        Json::Array(list) => list.into_iter().map(parse).collect::<Result<_, _>>()?,
        other => vec![parse(other)?],
    };
    let mut table = Table::new(vec!["suite", "index", "passed", "margin"]);
    let mut ok = true;
    for v in &items {
        let check = v.instance.check()?;
        ok &= check.passed;
        table.push(vec![
            v.suite.clone().into(),
            v.index.into(),
            check.passed.into(),
            check.margin.into(),
        ]);
    }
    write(&table, format, out, "replay", None, Map::new())?;
    Ok(ok)
}

/// A grid point of the `maxnormal` table: either a literal `N` or `2^K`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SampleCount {
    Exact(u64),
    Pow2(u32),
}

impl std::str::FromStr for SampleCount {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if let Some(exp) = s.strip_prefix("2^") {
            let k: u32 = exp.parse().map_err(|_| format!("bad exponent in '{s}'"))?;
            return Ok(SampleCount::Pow2(k));
        }
        let n: u64 = s.parse().map_err(|_| format!("'{s}' is neither an integer nor 2^K"))?;
        if n == 0 {
            return Err("N must be at least 1".into());
        }
        Ok(SampleCount::Exact(n))
    }
}

impl SampleCount {
    fn ln(self) -> f64 {
        match self {
            SampleCount::Exact(n) => (n as f64).ln(),
            SampleCount::Pow2(k) => f64::from(k) * std::f64::consts::LN_2,
        }
    }

    fn label(self) -> String {
        match self {
            SampleCount::Exact(n) => n.to_string(),
            SampleCount::Pow2(k) if k < 64 => (1u64 << k).to_string(),
            SampleCount::Pow2(k) => format!("2^{k}"),
        }
    }
}

pub const DEFAULT_MAXNORMAL_GRID: [SampleCount; 7] = [
    SampleCount::Exact(1),
    SampleCount::Exact(2),
    SampleCount::Pow2(4),
    SampleCount::Pow2(8),
    SampleCount::Pow2(12),
    SampleCount::Pow2(16),
    SampleCount::Pow2(20),
];

pub fn maxnormal(grid: &[SampleCount], format: Format, out: Option<&Path>) -> Result<bool, RunError> {
    if grid.is_empty() {
        return Err(ConfigError::Invalid("empty grid".into()).into());
    }
    let mut points = grid.to_vec();
    points.sort_by(|a, b| a.ln().total_cmp(&b.ln()));
    let mut table = Table::new(vec!["n", "log2_n", "expected_max", "var_max", "asymptote", "ratio"]);
    for p in points {
        let m = match p {
            SampleCount::Exact(n) => max_normal_moments(n)?,
            SampleCount::Pow2(k) => max_normal_moments_pow2(k)?,
        };
        let ln_n = p.ln();
        let asym = asymptotic_max_normal(ln_n.exp());
        let asym = if asym.is_finite() { asym } else { (2.0 * ln_n).sqrt() };
        let ratio = if asym > 0.0 { m.mean / asym } else { f64::NAN };
        table.push(vec![
            p.label().into(),
            (ln_n / std::f64::consts::LN_2).into(),
            m.mean.into(),
            m.var.into(),
            asym.into(),
            ratio.into(),
        ]);
    }
    write(&table, format, out, "maxnormal", None, Map::new())?;
    Ok(true)
}
