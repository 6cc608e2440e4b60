//! Hamming-space analogue of the argmax scheme for binary sources: Alice
//! looks for a block of `n` samples with a prescribed sum `n·ρ̃` and sends a
//! prefix of its index; Bob resolves the rest from his own block sums.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Open01};
use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;

use super::transcript::{index_bits, Diagnostics, EstimateResult, Speaker, Transcript};
use crate::error::{domain, Error, Result};
use crate::model::{check_rho, Family, PairBatch};
use crate::numeric::{binomial_pmf, ln_choose};

/// Finite-`n` design constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BlockParams {
    /// Expected number of qualifying blocks among Alice's `m`; search
    /// failure probability is about `e^{−c_search}`.
    pub c_search: f64,
    /// Budget for the expected number of falsely marked blocks sharing
    /// Alice's prefix.
    pub c_col: f64,
    /// Bob marks blocks whose sum lies within `window_scale·√n` of `n ρ_nom ρ̃`.
    pub window_scale: f64,
}

impl Default for BlockParams {
    fn default() -> Self {
        Self {
            c_search: 5.0,
            c_col: 0.05,
            window_scale: 1.0,
        }
    }
}

impl BlockParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("c_search", self.c_search),
            ("c_col", self.c_col),
            ("window_scale", self.window_scale),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(domain(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Largest index length whose blocks can be materialized.
const MAX_FULL_INDEX_BITS: u64 = 40;
/// Scan limit for [`BlockDesign::for_budget`].
const MAX_BLOCK_LEN: usize = 2_000_000;

/// All derived sizes of one block-scheme instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockDesign {
    pub n_block: usize,
    pub rho_tilde: f64,
    pub rho_nominal: f64,
    /// Number of `+1` entries in a qualifying block.
    pub target_plus: usize,
    /// `P[a uniform block qualifies]`.
    pub p_select: f64,
    /// Bits in a full block index; Alice holds `2^index_bits` blocks.
    pub index_bits: u64,
    /// Low index bits left for Bob to resolve.
    pub savings: u64,
    /// Bits actually sent.
    pub prefix_bits: u64,
    pub window_center: f64,
    pub window_half: f64,
    /// `P[a block with uniform Y is marked]`.
    pub p_mark: f64,
}

fn target_plus_count(n: usize, rho_tilde: f64) -> Option<usize> {
    let a = n as f64 * (1.0 + rho_tilde) / 2.0;
    let r = a.round();
    ((a - r).abs() < 1e-9).then_some(r as usize)
}

impl BlockDesign {
    pub fn new(n_block: usize, rho_tilde: f64, rho_nominal: f64, params: BlockParams) -> Result<Self> {
        params.validate()?;
        check_rho(rho_nominal)?;
        if !(rho_tilde > 0.0 && rho_tilde <= 1.0) {
            return Err(domain(format!("rho_tilde must lie in (0, 1], got {rho_tilde}")));
        }
        if n_block == 0 {
            return Err(domain("n_block must be positive"));
        }
        let a = target_plus_count(n_block, rho_tilde).ok_or_else(|| {
            domain(format!(
                "block sum n·rho_tilde = {} is not attainable by {n_block} signs",
                n_block as f64 * rho_tilde
            ))
        })?;
        let n = n_block as u64;
        let ln_p = ln_choose(n, a as u64) - n as f64 * LN_2;
        let index_bits = ((params.c_search.ln() - ln_p) / LN_2 - 1e-9).ceil().max(0.0) as u64;
        let window_center = n_block as f64 * rho_nominal * rho_tilde;
        let window_half = params.window_scale * (n_block as f64).sqrt();
        let mut design = Self {
            n_block,
            rho_tilde,
            rho_nominal,
            target_plus: a,
            p_select: ln_p.exp(),
            index_bits,
            savings: 0,
            prefix_bits: index_bits,
            window_center,
            window_half,
            p_mark: 0.0,
        };
        let (lo, hi) = design.window_plus_range();
        design.p_mark = (lo..=hi).map(|j| binomial_pmf(n, 0.5, j as u64)).sum();
        let savings = if design.p_mark > 0.0 {
            (1.0 + params.c_col / design.p_mark).log2().floor() as u64
        } else {
            index_bits
        };
        design.savings = savings.min(index_bits);
        design.prefix_bits = index_bits - design.savings;
        Ok(design)
    }

    /// Largest block length whose prefix fits in `k` bits.
    pub fn for_budget(k: u64, rho_tilde: f64, rho_nominal: f64, params: BlockParams) -> Result<Self> {
        let mut best = None;
        for n in 1..=MAX_BLOCK_LEN {
            if target_plus_count(n, rho_tilde).is_none() {
                continue;
            }
            let d = Self::new(n, rho_tilde, rho_nominal, params)?;
            if d.prefix_bits <= k {
                best = Some(d);
            } else if d.prefix_bits > k + 64 {
                break;
            }
        }
        best.ok_or_else(|| domain(format!("no block length fits a {k}-bit budget at rho_tilde = {rho_tilde}")))
    }

    /// Range of Bob's `+1` counts `j` with block sum `2j − n` in the window.
    fn window_plus_range(&self) -> (usize, usize) {
        let n = self.n_block as f64;
        let lo = ((self.window_center - self.window_half + n) / 2.0 - 1e-9).ceil().max(0.0);
        let hi = ((self.window_center + self.window_half + n) / 2.0 + 1e-9).floor().min(n);
        if lo > hi {
            // Empty window; return an empty range.
            return (1, 0);
        }
        (lo as usize, hi as usize)
    }

    fn is_marked(&self, sum: f64) -> bool {
        (sum - self.window_center).abs() <= self.window_half + 1e-9
    }

    fn estimate(&self, sum: f64) -> f64 {
        sum / (self.n_block as f64 * self.rho_tilde)
    }

    fn fallback(&self, transcript: Transcript, search_failure: bool) -> EstimateResult {
        let diag = Diagnostics {
            decode_failure: true,
            search_failure,
            wrong_decode: false,
        };
        EstimateResult::new(self.rho_nominal, transcript, diag)
    }

    /// Batch length needed by [`BlockScheme::run`].
    pub fn required_len(&self) -> Result<usize> {
        if self.index_bits > MAX_FULL_INDEX_BITS {
            return Err(Error::SizeGuard(format!(
                "{} index bits is too many blocks to materialize",
                self.index_bits
            )));
        }
        (1usize << self.index_bits)
            .checked_mul(self.n_block)
            .ok_or_else(|| Error::SizeGuard("block batch length overflows".into()))
    }
}

/// A block design checked against a bit budget `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockScheme {
    k: u64,
    design: BlockDesign,
}

impl BlockScheme {
    pub fn new(k: u64, design: BlockDesign) -> Result<Self> {
        if design.prefix_bits > k {
            return Err(domain(format!(
                "design needs {} bits, budget is {k}",
                design.prefix_bits
            )));
        }
        Ok(Self { k, design })
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn design(&self) -> &BlockDesign {
        &self.design
    }

    /// Runs on an explicit binary batch of `n · 2^index_bits` pairs.
    pub fn run(&self, batch: &PairBatch) -> Result<EstimateResult> {
        batch.expect_family(Family::Binary)?;
        let d = &self.design;
        let need = d.required_len()?;
        if batch.len() < need {
            return Err(Error::Shape(format!("block scheme needs {need} pairs, batch has {}", batch.len())));
        }
        let n = d.n_block;
        let blocks = 1usize << d.index_bits;
        let target = (2 * d.target_plus) as f64 - n as f64;
        let x_sums: Vec<f64> = batch.x()[..need].chunks_exact(n).map(|c| c.iter().sum()).collect();
        let y_sums: Vec<f64> = batch.y()[..need].chunks_exact(n).map(|c| c.iter().sum()).collect();
        let (chosen, search_failure) = match x_sums.iter().position(|s| *s == target) {
            Some(j) => (j, false),
            None => (0, true),
        };
        let prefix = (chosen >> d.savings) as u64;
        let mut transcript = Transcript::new();
        transcript.push_bits(Speaker::Alice, index_bits(prefix, d.prefix_bits as u32));

        let start = (prefix as usize) << d.savings;
        let end = (start + (1usize << d.savings)).min(blocks);
        let decoded = if end - start == 1 {
            Some(start)
        } else {
            let mut hits = (start..end).filter(|&j| d.is_marked(y_sums[j]));
            match (hits.next(), hits.next()) {
                (Some(j), None) => Some(j),
                _ => None,
            }
        };
        Ok(match decoded {
            Some(j) => {
                let diag = Diagnostics {
                    decode_failure: false,
                    search_failure,
                    wrong_decode: j != chosen,
                };
                EstimateResult::new(d.estimate(y_sums[j]), transcript, diag)
            }
            None => d.fallback(transcript, search_failure),
        })
    }

    /// Precomputes the distributional sampler at true correlation `rho`.
    pub fn sampler(&self, rho: f64) -> Result<BlockSampler> {
        BlockSampler::new(*self, rho)
    }
}

/// Draws the output of [`BlockScheme::run`] on a fresh batch without
/// materializing the `2^index_bits` blocks.
///
/// With `J` the first qualifying block, write `J − 1 = B·Q + R` for bucket
/// size `B = 2^savings`. Geometric `J` makes `R` a truncated geometric on
/// `[0, B)` independent of `Q`, so only the `R` bucket-mates before `J`
/// (conditioned not to qualify) and the `B − 1 − R` after it
/// (unconditioned) need to be described, and only through how many of
/// them Bob marks.
#[derive(Debug, Clone)]
pub struct BlockSampler {
    scheme: BlockScheme,
    rho: f64,
    agree: f64,
    ln_miss: f64,
    search_failure_prob: f64,
    /// Mark probability of a block conditioned not to qualify.
    p_mark_before: f64,
    /// Window `+1` counts with cumulative weights for unconditioned and
    /// non-qualifying blocks.
    window_lo: usize,
    cdf_after: Vec<f64>,
    cdf_before: Vec<f64>,
}

impl BlockSampler {
    fn new(scheme: BlockScheme, rho: f64) -> Result<Self> {
        check_rho(rho)?;
        let d = &scheme.design;
        let n = d.n_block as u64;
        let a = d.target_plus as u64;
        let agree = (1.0 + rho) / 2.0;
        let p_s = d.p_select;
        let ln_miss = (-p_s).ln_1p();
        let search_failure_prob = (2f64.powi(d.index_bits as i32) * ln_miss).exp();

        let (lo, hi) = d.window_plus_range();
        let mut w_after = Vec::new();
        let mut w_before = Vec::new();
        if lo <= hi {
            // Bob's +1 count on a qualifying block is A1 + (n − a − A2) with
            // A1 ~ Bin(a, agree), A2 ~ Bin(n − a, agree).
            let b1: Vec<f64> = (0..=a).map(|i| binomial_pmf(a, agree, i)).collect();
            let b2: Vec<f64> = (0..=n - a).map(|i| binomial_pmf(n - a, 1.0 - agree, i)).collect();
            for j in lo..=hi {
                let j = j as u64;
                let i_lo = j.saturating_sub(n - a);
                let i_hi = j.min(a);
                let target: f64 = (i_lo..=i_hi).map(|i| b1[i as usize] * b2[(j - i) as usize]).sum();
                let generic = binomial_pmf(n, 0.5, j);
                w_after.push(generic);
                w_before.push(((generic - p_s * target) / (1.0 - p_s)).max(0.0));
            }
        }
        let p_mark_before = if p_s < 1.0 { w_before.iter().sum() } else { 0.0 };
        Ok(Self {
            scheme,
            rho,
            agree,
            ln_miss,
            search_failure_prob,
            p_mark_before,
            window_lo: lo,
            cdf_after: cumulative(&w_after),
            cdf_before: cumulative(&w_before),
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn search_failure_prob(&self) -> f64 {
        self.search_failure_prob
    }

    /// Bob's block sum given Alice's block has `plus` entries equal to `+1`.
    fn bob_sum<R: Rng + ?Sized>(&self, plus: u64, rng: &mut R) -> Result<f64> {
        let n = self.scheme.design.n_block as u64;
        let a1 = draw_binomial(plus, self.agree, rng)?;
        let a2 = draw_binomial(n - plus, self.agree, rng)?;
        let y_plus = a1 + (n - plus - a2);
        Ok(2.0 * y_plus as f64 - n as f64)
    }

    fn marked_sum<R: Rng + ?Sized>(&self, before: bool, rng: &mut R) -> f64 {
        let cdf = if before { &self.cdf_before } else { &self.cdf_after };
        let total = *cdf.last().expect("nonempty window");
        let u: f64 = rng.sample::<f64, _>(Open01) * total;
        let idx = cdf.partition_point(|c| *c < u).min(cdf.len() - 1);
        2.0 * (self.window_lo + idx) as f64 - self.scheme.design.n_block as f64
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<EstimateResult> {
        let d = &self.scheme.design;
        let n = d.n_block as u64;
        let bucket = 2f64.powi(d.savings as i32);
        let mut transcript = Transcript::new();
        transcript.push_elided(Speaker::Alice, d.prefix_bits);

        let search_failure = rng.random::<f64>() < self.search_failure_prob;
        let (alice_sum, before, after) = if search_failure {
            let plus = loop {
                let p = draw_binomial(n, 0.5, rng)?;
                if p != d.target_plus as u64 {
                    break p;
                }
            };
            (self.bob_sum(plus, rng)?, bucket - 1.0, 0.0)
        } else {
            let r = if self.ln_miss == 0.0 || bucket == 1.0 {
                0.0
            } else {
                let u: f64 = rng.sample(Open01);
                let span = -(bucket * self.ln_miss).exp_m1();
                ((-u * span).ln_1p() / self.ln_miss).floor().clamp(0.0, bucket - 1.0)
            };
            (self.bob_sum(d.target_plus as u64, rng)?, r, bucket - 1.0 - r)
        };

        if d.savings == 0 {
            let diag = Diagnostics {
                search_failure,
                ..Diagnostics::default()
            };
            return Ok(EstimateResult::new(d.estimate(alice_sum), transcript, diag));
        }

        let (b0, b1) = none_or_one(before, self.p_mark_before);
        let (a0, a1) = none_or_one(after, d.p_mark);
        let u: f64 = rng.random();
        // Outcomes for the mates: none marked, exactly one before, exactly
        // one after, or at least two.
        let p_none = b0 * a0;
        let p_one_before = b1 * a0;
        let p_one_after = b0 * a1;
        let alice_marked = d.is_marked(alice_sum);
        let ok = Diagnostics {
            search_failure,
            ..Diagnostics::default()
        };
        if u < p_none {
            return Ok(if alice_marked {
                EstimateResult::new(d.estimate(alice_sum), transcript, ok)
            } else {
                d.fallback(transcript, search_failure)
            });
        }
        if alice_marked || u >= p_none + p_one_before + p_one_after {
            return Ok(d.fallback(transcript, search_failure));
        }
        let sum = self.marked_sum(u < p_none + p_one_before, rng);
        let diag = Diagnostics {
            wrong_decode: true,
            ..ok
        };
        Ok(EstimateResult::new(d.estimate(sum), transcript, diag))
    }
}

fn cumulative(w: &[f64]) -> Vec<f64> {
    w.iter()
        .scan(0.0, |acc, v| {
            *acc += v;
            Some(*acc)
        })
        .collect()
}

/// `(P[Bin(count, p) = 0], P[Bin(count, p) = 1])` for a real-valued count.
fn none_or_one(count: f64, p: f64) -> (f64, f64) {
    if count <= 0.0 || p <= 0.0 {
        return (1.0, 0.0);
    }
    if p >= 1.0 {
        return (0.0, if count == 1.0 { 1.0 } else { 0.0 });
    }
    let l = (-p).ln_1p();
    ((count * l).exp(), (count.ln() + p.ln() + (count - 1.0) * l).exp())
}

fn draw_binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> Result<u64> {
    if n == 0 {
        return Ok(0);
    }
    let dist = Binomial::new(n, p.clamp(0.0, 1.0)).map_err(|e| domain(e.to_string()))?;
    Ok(dist.sample(rng))
}

/// Block scheme with explicit block length under budget `k`.
pub fn run_binary_block(
    k: u64,
    rho_tilde: f64,
    n_block: usize,
    rho_nominal: f64,
    params: BlockParams,
    batch: &PairBatch,
) -> Result<EstimateResult> {
    let design = BlockDesign::new(n_block, rho_tilde, rho_nominal, params)?;
    BlockScheme::new(k, design)?.run(batch)
}
