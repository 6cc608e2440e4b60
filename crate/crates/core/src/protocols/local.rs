//! Argmax scheme with side information at Bob: Bob marks the indices whose
//! sample clears a threshold tuned to a nominal correlation, so Alice only
//! needs to send a prefix of her argmax index.

use rand::Rng;
use rand_distr::Open01;
use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;

use super::extreme::{max_normal_moments_pow2, sample_max_normal, MaxMoments};
use super::max::{argmax_first, check_full_k, check_index_len, correlated_partner};
use super::transcript::{index_bits, Diagnostics, EstimateResult, Speaker, Transcript};
use crate::error::{domain, Error, Result};
use crate::model::{check_rho, Family, PairBatch};
use crate::numeric::{integrate, normal_isf, normal_pdf, normal_sf};

/// Finite-`k` stand-ins for the asymptotic threshold and rate slack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LocalParams {
    /// Bob's threshold is `|ρ_nom| √(2K ln2) (1 − c_threshold)`.
    pub c_threshold: f64,
    /// Alice sends `⌈K (1 − ρ_nom²)(1 + c_bits)⌉` bits, capped at `K`.
    pub c_bits: f64,
}

impl Default for LocalParams {
    fn default() -> Self {
        Self {
            c_threshold: 0.1,
            c_bits: 0.15,
        }
    }
}

impl LocalParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c_threshold >= 0.0 && self.c_threshold < 1.0) {
            return Err(domain(format!("c_threshold must lie in [0, 1), got {}", self.c_threshold)));
        }
        if !(self.c_bits >= 0.0 && self.c_bits.is_finite()) {
            return Err(domain(format!("c_bits must be finite and >= 0, got {}", self.c_bits)));
        }
        Ok(())
    }
}

/// Number of prefix bits Alice sends for index length `index_len`.
pub fn prefix_bits(index_len: u64, rho_nominal: f64, c_bits: f64) -> u64 {
    let raw = index_len as f64 * (1.0 - rho_nominal * rho_nominal) * (1.0 + c_bits);
    // Absorb rounding noise so exact products are not pushed up a bit.
    let m = (raw - 1e-9).ceil().max(1.0) as u64;
    m.min(index_len)
}

const MAX_REJECTIONS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalScheme {
    index_len: u64,
    prefix_bits: u64,
    rho_nominal: f64,
    sign: f64,
    threshold: f64,
    moments: MaxMoments,
}

impl LocalScheme {
    /// Scheme over `2^index_len` samples.
    pub fn new(index_len: u64, rho_nominal: f64, params: LocalParams) -> Result<Self> {
        check_index_len(index_len)?;
        check_rho(rho_nominal)?;
        if rho_nominal.abs() >= 1.0 {
            return Err(domain("|rho_nominal| must be < 1"));
        }
        params.validate()?;
        let moments = max_normal_moments_pow2(index_len as u32)?;
        Ok(Self::with_moments(index_len, rho_nominal, params, moments))
    }

    /// As [`Self::new`] with `E[X_W]` supplied by the caller, for callers
    /// that cache moments across nominal correlations.
    pub(crate) fn with_moments(index_len: u64, rho_nominal: f64, params: LocalParams, moments: MaxMoments) -> Self {
        let sign = if rho_nominal < 0.0 { -1.0 } else { 1.0 };
        let threshold = rho_nominal.abs() * (2.0 * index_len as f64 * LN_2).sqrt() * (1.0 - params.c_threshold);
        Self {
            index_len,
            prefix_bits: prefix_bits(index_len, rho_nominal, params.c_bits),
            rho_nominal,
            sign,
            threshold,
            moments,
        }
    }

    pub fn index_len(&self) -> u64 {
        self.index_len
    }

    pub fn prefix_bits(&self) -> u64 {
        self.prefix_bits
    }

    pub fn rho_nominal(&self) -> f64 {
        self.rho_nominal
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn moments(&self) -> MaxMoments {
        self.moments
    }

    fn is_marked(&self, y: f64) -> bool {
        self.sign * y > self.threshold
    }

    fn fallback(&self, transcript: Transcript) -> EstimateResult {
        let diag = Diagnostics {
            decode_failure: true,
            ..Diagnostics::default()
        };
        EstimateResult::new(self.rho_nominal, transcript, diag)
    }

    /// Runs on an explicit Gaussian batch; uses pairs `offset..offset+2^K`.
    pub fn run_at(&self, batch: &PairBatch, offset: usize) -> Result<EstimateResult> {
        batch.expect_family(Family::Gaussian)?;
        check_full_k(self.index_len)?;
        let n = 1usize << self.index_len;
        if batch.len() < offset + n {
            return Err(Error::Shape(format!(
                "local scheme needs {} pairs, batch has {}",
                offset + n,
                batch.len()
            )));
        }
        let x = &batch.x()[offset..offset + n];
        let y = &batch.y()[offset..offset + n];
        let w = argmax_first(x);
        let shift = self.index_len - self.prefix_bits;
        let prefix = (w >> shift) as u64;
        let mut transcript = Transcript::new();
        transcript.push_bits(Speaker::Alice, index_bits(prefix, self.prefix_bits as u32));

        let start = (prefix as usize) << shift;
        let end = start + (1usize << shift);
        let decoded = if end - start == 1 {
            Some(start)
        } else {
            let mut hits = (start..end).filter(|&i| self.is_marked(y[i]));
            match (hits.next(), hits.next()) {
                (Some(i), None) => Some(i),
                _ => None,
            }
        };
        Ok(match decoded {
            Some(d) => {
                let diag = Diagnostics {
                    wrong_decode: d != w,
                    ..Diagnostics::default()
                };
                EstimateResult::new(y[d] / self.moments.mean, transcript, diag)
            }
            None => self.fallback(transcript),
        })
    }

    pub fn run(&self, batch: &PairBatch) -> Result<EstimateResult> {
        self.run_at(batch, 0)
    }

    /// `P[mate marked | X_W = xw]` for a non-argmax sample, whose `X` is
    /// conditioned below `xw`.
    fn mate_mark_prob(&self, rho: f64, xw: f64) -> f64 {
        let tail = normal_sf(self.threshold);
        let s = (1.0 - rho * rho).max(0.0).sqrt();
        let a = self.sign * rho;
        // Mass of {X > xw, marked}.
        let above = if s < 1e-12 {
            if a > 0.0 {
                normal_sf(xw.max(self.threshold / a))
            } else if a < 0.0 {
                let cut = self.threshold / a;
                if xw < cut {
                    normal_sf(xw) - normal_sf(cut)
                } else {
                    0.0
                }
            } else {
                0.0
            }
        } else {
            let f = |t: f64| normal_pdf(t) * normal_sf((self.threshold - a * t) / s);
            integrate(f, xw, xw + 12.0, 1e-12 * tail, 200).0
        };
        ((tail - above) / (1.0 - normal_sf(xw))).clamp(0.0, 1.0)
    }

    /// Same output distribution as [`Self::run`] on a fresh batch of
    /// correlation `rho`. Draws the argmax pair, then the number of marked
    /// samples among the other members of its prefix bucket, which is
    /// binomial given `X_W`.
    pub fn sample<R: Rng + ?Sized>(&self, rho: f64, rng: &mut R) -> Result<EstimateResult> {
        check_rho(rho)?;
        let xw = sample_max_normal(self.index_len as f64 * LN_2, rng);
        let yw = correlated_partner(rho, xw, rng);
        let mut transcript = Transcript::new();
        transcript.push_elided(Speaker::Alice, self.prefix_bits);
        let shift = self.index_len - self.prefix_bits;
        if shift == 0 {
            return Ok(EstimateResult::new(yw / self.moments.mean, transcript, Diagnostics::default()));
        }
        let mates = 2f64.powi(shift as i32) - 1.0;
        let q = self.mate_mark_prob(rho, xw);
        let (p0, p1) = if q <= 0.0 {
            (1.0, 0.0)
        } else if q >= 1.0 {
            (0.0, if mates == 1.0 { 1.0 } else { 0.0 })
        } else {
            let l = (-q).ln_1p();
            ((mates * l).exp(), (mates.ln() + q.ln() + (mates - 1.0) * l).exp())
        };
        let u: f64 = rng.random();
        let marked_mates = if u < p0 {
            0
        } else if u < p0 + p1 {
            1
        } else {
            2
        };
        let w_marked = self.is_marked(yw);
        match (w_marked, marked_mates) {
            (true, 0) => Ok(EstimateResult::new(yw / self.moments.mean, transcript, Diagnostics::default())),
            (false, 1) => {
                let y = self.sample_marked_mate(rho, xw, rng)?;
                let diag = Diagnostics {
                    wrong_decode: true,
                    ..Diagnostics::default()
                };
                Ok(EstimateResult::new(y / self.moments.mean, transcript, diag))
            }
            _ => Ok(self.fallback(transcript)),
        }
    }

    /// `Y` of a sample conditioned on being marked and on `X < xw`.
    fn sample_marked_mate<R: Rng + ?Sized>(&self, rho: f64, xw: f64, rng: &mut R) -> Result<f64> {
        let tail = normal_sf(self.threshold);
        for _ in 0..MAX_REJECTIONS {
            let u: f64 = rng.sample(Open01);
            let y = self.sign * normal_isf(u * tail);
            let x = correlated_partner(rho, y, rng);
            if x < xw {
                return Ok(y);
            }
        }
        Err(Error::Undefined("could not draw a marked non-argmax sample".into()))
    }
}

/// Local scheme with index length `k`: `2^k` samples, `m ≤ k` prefix bits.
pub fn run_local_scheme(
    k: u64,
    rho_nominal: f64,
    batch: &PairBatch,
    c_threshold: f64,
    c_bits: f64,
) -> Result<EstimateResult> {
    check_full_k(k)?;
    LocalScheme::new(k, rho_nominal, LocalParams { c_threshold, c_bits })?.run(batch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{gen_pairs, CorrelationModel};

    #[test]
    fn prefix_lengths() {
        assert_eq!(prefix_bits(18, 0.6, 0.15), 14);
        assert_eq!(prefix_bits(18, 0.0, 0.15), 18);
        assert_eq!(prefix_bits(20, 0.0, 0.0), 20);
        assert_eq!(prefix_bits(10, 0.9, 0.0), 2);
    }

    #[test]
    fn zero_nominal_is_max_scheme() {
        let b = gen_pairs(&CorrelationModel::gaussian(0.2).unwrap(), 1 << 10, 8).unwrap();
        let l = run_local_scheme(10, 0.0, &b, 0.1, 0.15).unwrap();
        let m = super::super::max::run_max_scheme(10, &b).unwrap();
        assert_eq!(l.raw_estimate, m.raw_estimate);
        assert_eq!(l.bits_used, 10);
    }

    #[test]
    fn invalid_constants() {
        let b = gen_pairs(&CorrelationModel::gaussian(0.2).unwrap(), 1 << 4, 8).unwrap();
        assert!(run_local_scheme(4, 0.5, &b, 1.0, 0.15).is_err());
        assert!(run_local_scheme(4, 0.5, &b, 0.1, -0.1).is_err());
        assert!(run_local_scheme(4, 1.0, &b, 0.1, 0.1).is_err());
        assert!(run_local_scheme(5, 0.5, &b, 0.1, 0.1).is_err());
    }

    #[test]
    fn failure_falls_back_to_nominal() {
        // Bob's samples all sit below the threshold, so nothing is marked.
        let g = gen_pairs(&CorrelationModel::gaussian(0.0).unwrap(), 1 << 12, 3).unwrap();
        let b = PairBatch::new(Family::Gaussian, g.x().to_vec(), vec![0.0; 1 << 12]).unwrap();
        let s = LocalScheme::new(12, 0.95, LocalParams::default()).unwrap();
        let r = s.run(&b).unwrap();
        assert!(r.diagnostics.decode_failure);
        assert_eq!(r.rho_hat, 0.95);
        assert!(r.bits_used < 12);
    }

    #[test]
    fn mate_mark_prob_limits() {
        let s = LocalScheme::new(10, 0.5, LocalParams::default()).unwrap();
        // Far above every mate, the conditioning is vacuous.
        let q = s.mate_mark_prob(0.5, 30.0);
        assert!((q - normal_sf(s.threshold())).abs() < 1e-12);
        let q1 = s.mate_mark_prob(1.0, 3.0);
        assert!((0.0..=1.0).contains(&q1));
    }
}
