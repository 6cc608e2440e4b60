//! Monte Carlo risk estimation over independent trials.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::block::{BlockDesign, BlockParams, BlockSampler, BlockScheme};
use super::local::{LocalParams, LocalScheme};
use super::max::{check_full_k, MaxScheme};
use super::naive::run_naive;
use super::transcript::EstimateResult;
use super::two_way::{default_first_round, TwoWayScheme};
use crate::error::{domain, Error, Result};
use crate::model::{check_rho, sample_columns, CorrelationModel, Family, PairBatch};
use crate::rng::{substream, SimRng};

/// Smallest trial count accepted by [`estimate_risk`].
pub const MIN_TRIALS: u64 = 100;

/// A scheme and its tuning, independent of the bit budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum SchemeConfig {
    Naive,
    Max,
    Local {
        /// Defaults to the true correlation of the cell being simulated.
        rho_nominal: Option<f64>,
        #[serde(default)]
        params: LocalParams,
    },
    Block {
        rho_tilde: f64,
        /// Defaults to the largest block length fitting the budget.
        n_block: Option<usize>,
        /// Defaults to the true correlation of the cell being simulated.
        rho_nominal: Option<f64>,
        #[serde(default)]
        params: BlockParams,
    },
    TwoWay {
        /// Defaults to `⌈√k⌉`.
        k1: Option<u64>,
        #[serde(default)]
        params: LocalParams,
    },
}

impl SchemeConfig {
    pub fn name(&self) -> &'static str {
        match self {
            SchemeConfig::Naive => "naive",
            SchemeConfig::Max => "max",
            SchemeConfig::Local { .. } => "local",
            SchemeConfig::Block { .. } => "block",
            SchemeConfig::TwoWay { .. } => "two_way",
        }
    }

    pub fn local_default() -> Self {
        SchemeConfig::Local {
            rho_nominal: None,
            params: LocalParams::default(),
        }
    }

    pub fn two_way_default() -> Self {
        SchemeConfig::TwoWay {
            k1: None,
            params: LocalParams::default(),
        }
    }
}

/// How trials draw their data.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    /// Draw only the statistics the estimator depends on, with the same
    /// joint law as the full path. Schemes without such a sampler run in
    /// full.
    #[default]
    Auto,
    /// Materialize every sample pair and run the protocol literally.
    Full,
}

/// A scheme with all budget-dependent constants computed.
#[derive(Debug, Clone)]
pub enum PreparedScheme {
    Naive { k: u64 },
    Max(MaxScheme),
    Local(LocalScheme),
    Block(BlockScheme, Box<BlockSampler>),
    TwoWay(TwoWayScheme),
}

impl PreparedScheme {
    pub fn new(config: &SchemeConfig, k: u64, rho_true: f64) -> Result<Self> {
        check_rho(rho_true)?;
        if k == 0 {
            return Err(domain("k must be at least 1"));
        }
        Ok(match config {
            SchemeConfig::Naive => PreparedScheme::Naive { k },
            SchemeConfig::Max => PreparedScheme::Max(MaxScheme::new(k)?),
            SchemeConfig::Local { rho_nominal, params } => {
                PreparedScheme::Local(LocalScheme::new(k, rho_nominal.unwrap_or(rho_true), *params)?)
            }
            SchemeConfig::Block {
                rho_tilde,
                n_block,
                rho_nominal,
                params,
            } => {
                let nominal = rho_nominal.unwrap_or(rho_true);
                let design = match n_block {
                    Some(n) => BlockDesign::new(*n, *rho_tilde, nominal, *params)?,
                    None => BlockDesign::for_budget(k, *rho_tilde, nominal, *params)?,
                };
                let scheme = BlockScheme::new(k, design)?;
                let sampler = scheme.sampler(rho_true)?;
                PreparedScheme::Block(scheme, Box::new(sampler))
            }
            SchemeConfig::TwoWay { k1, params } => {
                PreparedScheme::TwoWay(TwoWayScheme::new(k, k1.unwrap_or_else(|| default_first_round(k)), *params)?)
            }
        })
    }

    pub fn family(&self) -> Family {
        match self {
            PreparedScheme::Naive { .. } | PreparedScheme::Block(..) => Family::Binary,
            _ => Family::Gaussian,
        }
    }

    /// Pairs needed per trial on the full path.
    pub fn batch_len(&self) -> Result<usize> {
        match self {
            PreparedScheme::Naive { k } => Ok(*k as usize),
            PreparedScheme::Max(s) => {
                check_full_k(s.k())?;
                Ok(1usize << s.k())
            }
            PreparedScheme::Local(s) => {
                check_full_k(s.index_len())?;
                Ok(1usize << s.index_len())
            }
            PreparedScheme::Block(s, _) => s.design().required_len(),
            PreparedScheme::TwoWay(s) => s.required_len(),
        }
    }

    /// Runs the protocol on an explicit batch.
    pub fn run(&self, batch: &PairBatch) -> Result<EstimateResult> {
        match self {
            PreparedScheme::Naive { k } => run_naive(*k, batch),
            PreparedScheme::Max(s) => s.run(batch),
            PreparedScheme::Local(s) => s.run(batch),
            PreparedScheme::Block(s, _) => s.run(batch),
            PreparedScheme::TwoWay(s) => s.run(batch),
        }
    }

    /// One trial at correlation `rho`: the only source of randomness is `rng`.
    pub fn run_trial(&self, rho: f64, sampling: Sampling, rng: &mut SimRng) -> Result<EstimateResult> {
        let reduced = match (sampling, self) {
            (Sampling::Full, _) | (_, PreparedScheme::Naive { .. }) => None,
            (Sampling::Auto, PreparedScheme::Max(s)) => Some(s.sample(rho, rng)),
            (Sampling::Auto, PreparedScheme::Local(s)) => Some(s.sample(rho, rng)),
            (Sampling::Auto, PreparedScheme::Block(_, sampler)) => Some(sampler.sample(rng)),
            (Sampling::Auto, PreparedScheme::TwoWay(s)) => Some(s.sample(rho, rng)),
        };
        match reduced {
            Some(r) => r,
            None => {
                let model = CorrelationModel::new(self.family(), rho)?;
                let (x, y) = sample_columns(&model, self.batch_len()?, rng);
                self.run(&PairBatch::new(self.family(), x, y)?)
            }
        }
    }
}

/// Monte Carlo summary of one `(scheme, k, ρ)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub rho_true: f64,
    pub k: u64,
    pub trials: u64,
    /// Moments of the truncated estimate `ρ̂ ∈ [−1, 1]`.
    pub mse: f64,
    pub bias: f64,
    pub variance: f64,
    /// `1.96 · sd(squared errors) / √trials`.
    pub ci95_halfwidth: f64,
    pub seed: u64,
    pub mean_estimate: f64,
    /// Standard error of `mean_estimate`.
    pub se_mean: f64,
    /// Moments of the estimator before truncation.
    pub raw: RawMoments,
    pub decode_failure_rate: f64,
    pub search_failure_rate: f64,
    pub wrong_decode_rate: f64,
    pub mean_bits: f64,
    pub max_bits: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawMoments {
    pub mean: f64,
    pub se_mean: f64,
    pub mse: f64,
    /// Standard error of `mse`.
    pub se_mse: f64,
    pub variance: f64,
}

struct Moments {
    mean: f64,
    var: f64,
    mse: f64,
    sq_err_sd: f64,
}

fn moments(values: &[f64], truth: f64) -> Moments {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let sq: Vec<f64> = values.iter().map(|v| (v - truth).powi(2)).collect();
    let mse = sq.iter().sum::<f64>() / n;
    let sq_var = sq.iter().map(|s| (s - mse).powi(2)).sum::<f64>() / n;
    Moments {
        mean,
        var,
        mse,
        sq_err_sd: sq_var.sqrt(),
    }
}

/// Runs `trial` for indices `0..trials`, each on its own substream of
/// `master_seed`, and aggregates. Trials run in parallel; aggregation is in
/// index order, so the report does not depend on the thread count.
pub fn estimate_risk_fn<F>(rho_true: f64, k: u64, trials: u64, master_seed: u64, trial: F) -> Result<RiskReport>
where
    F: Fn(&mut SimRng) -> Result<EstimateResult> + Sync,
{
    if trials < MIN_TRIALS {
        return Err(domain(format!("at least {MIN_TRIALS} trials required, got {trials}")));
    }
    let outcomes: Vec<Result<EstimateResult>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(master_seed, "trial", i);
            let r = trial(&mut rng)?;
            r.transcript.check_budget(k)?;
            Ok(r)
        })
        .collect();
    let mut clamped = Vec::with_capacity(trials as usize);
    let mut raw = Vec::with_capacity(trials as usize);
    let (mut dec, mut search, mut wrong, mut bits, mut max_bits) = (0u64, 0u64, 0u64, 0u64, 0u64);
    for (i, o) in outcomes.into_iter().enumerate() {
        let r = o.map_err(|e| Error::Trial {
            index: i as u64,
            source: Box::new(e),
        })?;
        clamped.push(r.rho_hat);
        raw.push(r.raw_estimate);
        dec += u64::from(r.diagnostics.decode_failure);
        search += u64::from(r.diagnostics.search_failure);
        wrong += u64::from(r.diagnostics.wrong_decode);
        bits += r.bits_used;
        max_bits = max_bits.max(r.bits_used);
    }
    let t = trials as f64;
    let c = moments(&clamped, rho_true);
    let r = moments(&raw, rho_true);
    Ok(RiskReport {
        rho_true,
        k,
        trials,
        mse: c.mse,
        bias: c.mean - rho_true,
        variance: c.var,
        ci95_halfwidth: 1.96 * c.sq_err_sd / t.sqrt(),
        seed: master_seed,
        mean_estimate: c.mean,
        se_mean: (c.var / t).sqrt(),
        raw: RawMoments {
            mean: r.mean,
            se_mean: (r.var / t).sqrt(),
            mse: r.mse,
            se_mse: r.sq_err_sd / t.sqrt(),
            variance: r.var,
        },
        decode_failure_rate: dec as f64 / t,
        search_failure_rate: search as f64 / t,
        wrong_decode_rate: wrong as f64 / t,
        mean_bits: bits as f64 / t,
        max_bits,
    })
}

/// Risk of `config` at budget `k` and true correlation `rho_true`.
pub fn estimate_risk(
    config: &SchemeConfig,
    k: u64,
    rho_true: f64,
    trials: u64,
    master_seed: u64,
    sampling: Sampling,
) -> Result<RiskReport> {
    let scheme = PreparedScheme::new(config, k, rho_true)?;
    if sampling == Sampling::Full {
        scheme.batch_len()?;
    }
    estimate_risk_fn(rho_true, k, trials, master_seed, |rng| {
        scheme.run_trial(rho_true, sampling, rng)
    })
}
