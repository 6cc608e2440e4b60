//! Two-round scheme: a short sign exchange gives Bob a rough estimate,
//! which then tunes a local scheme on fresh samples.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;

use super::extreme::max_normal_moments_pow2;
use super::local::{prefix_bits, LocalParams, LocalScheme};
use super::max::{check_full_k, MAX_REDUCED_K};
use super::transcript::{index_bits, EstimateResult, Payload, Speaker, Transcript};
use crate::error::{domain, Error, Result};
use crate::model::{check_rho, sample_columns, CorrelationModel, Family, PairBatch};

/// The first-round estimate is clipped to `[−PILOT_CLAMP, PILOT_CLAMP]`.
pub const PILOT_CLAMP: f64 = 0.9;

/// `⌈√k⌉` first-round bits.
pub fn default_first_round(k: u64) -> u64 {
    (k as f64).sqrt().ceil() as u64
}

/// Bits Bob spends returning the quantized pilot estimate.
pub fn reply_bits(k1: u64) -> u64 {
    64 - (k1.max(1) - 1).leading_zeros() as u64 + 1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoWayInfo {
    pub k: u64,
    pub k1: u64,
    pub reply_bits: u64,
    pub phase2_budget: u64,
}

#[derive(Debug, Clone)]
pub struct TwoWayScheme {
    info: TwoWayInfo,
    grid: Vec<f64>,
    phase2: Vec<LocalScheme>,
}

impl TwoWayScheme {
    /// Round 1: Alice sends the signs of `X_1..X_{k1}`. Round 2: Bob returns
    /// `√(π/2) · mean(sign(X_j) Y_j)` clipped and rounded to a grid of
    /// `2^reply_bits` points. Round 3: Alice runs the local scheme with that
    /// nominal correlation and the longest index whose prefix fits in the
    /// remaining budget.
    pub fn new(k: u64, k1: u64, params: LocalParams) -> Result<Self> {
        if k1 == 0 {
            return Err(domain("first round needs at least one bit"));
        }
        if k1 >= k {
            return Err(domain(format!("first round uses {k1} of {k} bits")));
        }
        params.validate()?;
        let rb = reply_bits(k1);
        if k1 + rb >= k {
            return Err(domain(format!("no budget left after {k1} + {rb} first-round bits")));
        }
        let budget = k - k1 - rb;
        let levels = 1usize << rb;
        let grid: Vec<f64> = (0..levels)
            .map(|i| -PILOT_CLAMP + 2.0 * PILOT_CLAMP * i as f64 / (levels - 1) as f64)
            .collect();
        let mut moments = BTreeMap::new();
        let mut phase2 = Vec::with_capacity(levels);
        for &r in &grid {
            let len = longest_index(budget, r, params.c_bits)?;
            let m = match moments.get(&len) {
                Some(m) => *m,
                None => {
                    let m = max_normal_moments_pow2(len as u32)?;
                    moments.insert(len, m);
                    m
                }
            };
            phase2.push(LocalScheme::with_moments(len, r, params, m));
        }
        Ok(Self {
            info: TwoWayInfo {
                k,
                k1,
                reply_bits: rb,
                phase2_budget: budget,
            },
            grid,
            phase2,
        })
    }

    pub fn info(&self) -> TwoWayInfo {
        self.info
    }

    /// Largest phase-2 index length over all pilot values.
    pub fn max_index_len(&self) -> u64 {
        self.phase2.iter().map(LocalScheme::index_len).max().unwrap_or(0)
    }

    pub fn phase2_schemes(&self) -> &[LocalScheme] {
        &self.phase2
    }

    fn quantize(&self, x: &[f64], y: &[f64]) -> usize {
        let pilot = pilot_estimate(x, y).clamp(-PILOT_CLAMP, PILOT_CLAMP);
        let step = 2.0 * PILOT_CLAMP / (self.grid.len() - 1) as f64;
        (((pilot + PILOT_CLAMP) / step).round() as usize).min(self.grid.len() - 1)
    }

    fn first_rounds(&self, x: &[f64], level: usize) -> Transcript {
        let mut t = Transcript::new();
        t.push_bits(Speaker::Alice, x.iter().map(|v| *v > 0.0).collect());
        t.push_bits(Speaker::Bob, index_bits(level as u64, self.info.reply_bits as u32));
        t
    }

    fn merge(mut head: Transcript, tail: EstimateResult) -> EstimateResult {
        for m in tail.transcript.messages() {
            match &m.payload {
                Payload::Bits(b) => head.push_bits(m.speaker, b.clone()),
                Payload::Elided => head.push_elided(m.speaker, m.bit_count),
            }
        }
        EstimateResult::new(tail.raw_estimate, head, tail.diagnostics)
    }

    /// Batch length that covers every possible phase-2 index length.
    pub fn required_len(&self) -> Result<usize> {
        let len = self.max_index_len();
        check_full_k(len)?;
        Ok(self.info.k1 as usize + (1usize << len))
    }

    /// Runs on an explicit Gaussian batch: pilot on the first `k1` pairs,
    /// phase 2 on the pairs after them.
    pub fn run(&self, batch: &PairBatch) -> Result<EstimateResult> {
        batch.expect_family(Family::Gaussian)?;
        let k1 = self.info.k1 as usize;
        if batch.len() < k1 {
            return Err(Error::Shape("batch shorter than the first round".into()));
        }
        let (x, y) = (&batch.x()[..k1], &batch.y()[..k1]);
        let level = self.quantize(x, y);
        let head = self.first_rounds(x, level);
        let tail = self.phase2[level].run_at(batch, k1)?;
        let out = Self::merge(head, tail);
        out.transcript.check_budget(self.info.k)?;
        Ok(out)
    }

    /// Distributional counterpart of [`Self::run`] at correlation `rho`.
    pub fn sample<R: Rng + ?Sized>(&self, rho: f64, rng: &mut R) -> Result<EstimateResult> {
        check_rho(rho)?;
        let model = CorrelationModel::gaussian(rho)?;
        let (x, y) = sample_columns(&model, self.info.k1 as usize, rng);
        let level = self.quantize(&x, &y);
        let mut head = Transcript::new();
        head.push_elided(Speaker::Alice, self.info.k1);
        head.push_elided(Speaker::Bob, self.info.reply_bits);
        let tail = self.phase2[level].sample(rho, rng)?;
        Ok(Self::merge(head, tail))
    }
}

/// Largest index length whose prefix fits in `budget` bits.
fn longest_index(budget: u64, rho_nominal: f64, c_bits: f64) -> Result<u64> {
    if budget == 0 {
        return Err(domain("phase-2 budget is empty"));
    }
    let mut len = budget;
    while len < MAX_REDUCED_K && prefix_bits(len + 1, rho_nominal, c_bits) <= budget {
        len += 1;
    }
    Ok(len)
}

/// Two-way scheme with `k1` first-round bits on an explicit batch.
pub fn run_two_way(k: u64, batch: &PairBatch, k1: u64) -> Result<EstimateResult> {
    TwoWayScheme::new(k, k1, LocalParams::default())?.run(batch)
}

/// Unclipped first-round estimate `√(π/2) · mean(sign(X_j) Y_j)`.
pub fn pilot_estimate(x: &[f64], y: &[f64]) -> f64 {
    let s: f64 = x.iter().zip(y).map(|(a, b)| a.signum() * b).sum();
    (PI / 2.0).sqrt() * s / x.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::gen_pairs;

    #[test]
    fn reply_widths() {
        assert_eq!(reply_bits(1), 1);
        assert_eq!(reply_bits(2), 2);
        assert_eq!(reply_bits(8), 4);
        assert_eq!(reply_bits(9), 5);
        assert_eq!(default_first_round(64), 8);
        assert_eq!(default_first_round(65), 9);
    }

    #[test]
    fn rejects_bad_first_round() {
        assert!(TwoWayScheme::new(64, 0, LocalParams::default()).is_err());
        assert!(TwoWayScheme::new(8, 8, LocalParams::default()).is_err());
        assert!(TwoWayScheme::new(8, 5, LocalParams::default()).is_err());
    }

    #[test]
    fn phase2_fits_budget() {
        let s = TwoWayScheme::new(64, 8, LocalParams::default()).unwrap();
        for l in s.phase2_schemes() {
            assert!(l.prefix_bits() <= s.info().phase2_budget);
        }
        // Zero-centred grid points have the shortest index.
        assert!(s.max_index_len() > s.info().phase2_budget);
    }

    #[test]
    fn full_run_respects_budget() {
        // A generous rate slack keeps every phase-2 index materializable.
        let params = LocalParams {
            c_threshold: 0.1,
            c_bits: 4.0,
        };
        let s = TwoWayScheme::new(16, 4, params).unwrap();
        let len = s.required_len().unwrap();
        let b = gen_pairs(&CorrelationModel::gaussian(0.5).unwrap(), len, 9).unwrap();
        let r = s.run(&b).unwrap();
        assert!(r.bits_used <= 16);
        assert_eq!(r.transcript.messages()[0].speaker, Speaker::Alice);
        assert_eq!(r.transcript.messages()[1].speaker, Speaker::Bob);
    }

    #[test]
    fn pilot_is_unbiased_scale() {
        let b = gen_pairs(&CorrelationModel::gaussian(0.6).unwrap(), 400_000, 1).unwrap();
        let p = pilot_estimate(b.x(), b.y());
        assert!((p - 0.6).abs() < 0.01);
    }
}
