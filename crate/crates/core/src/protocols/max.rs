//! One-way argmax scheme: Alice sends the index of her largest sample out
//! of `2^k`, Bob rescales his sample at that index.

use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::LN_2;

use super::extreme::{max_normal_moments_pow2, sample_max_normal, MaxMoments};
use super::transcript::{index_bits, Diagnostics, EstimateResult, Speaker, Transcript};
use crate::error::{Error, Result};
use crate::model::{check_rho, Family, PairBatch};

/// Largest index length for schemes that materialize all `2^k` samples.
pub const MAX_FULL_K: u64 = 26;
/// Largest index length for the distributional samplers (`2^k` must stay
/// finite in `f64`).
pub const MAX_REDUCED_K: u64 = 1000;

pub(crate) fn check_full_k(k: u64) -> Result<()> {
    if k > MAX_FULL_K {
        return Err(Error::SizeGuard(format!(
            "index length {k} exceeds the {MAX_FULL_K}-bit limit for materialized batches"
        )));
    }
    Ok(())
}

pub(crate) fn check_index_len(k: u64) -> Result<()> {
    if k == 0 || k > MAX_REDUCED_K {
        return Err(Error::ParameterDomain(format!(
            "index length must lie in [1, {MAX_REDUCED_K}], got {k}"
        )));
    }
    Ok(())
}

/// Index of the first maximal entry.
pub(crate) fn argmax_first(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in xs.iter().enumerate().skip(1) {
        if v > xs[best] {
            best = i;
        }
    }
    best
}

/// Draws `ρX + √(1−ρ²)Z` for a given `X`.
pub(crate) fn correlated_partner<R: Rng + ?Sized>(rho: f64, x: f64, rng: &mut R) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    rho * x + (1.0 - rho * rho).max(0.0).sqrt() * z
}

/// Argmax scheme with the exact `E[X_W]` precomputed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxScheme {
    k: u64,
    moments: MaxMoments,
}

impl MaxScheme {
    pub fn new(k: u64) -> Result<Self> {
        check_index_len(k)?;
        Ok(Self {
            k,
            moments: max_normal_moments_pow2(k as u32)?,
        })
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    /// Mean and variance of `X_W`.
    pub fn moments(&self) -> MaxMoments {
        self.moments
    }

    /// Exact risk `(1 − ρ² + ρ² Var X_W) / (E X_W)²` of the unclamped estimator.
    pub fn exact_mse(&self, rho: f64) -> f64 {
        let MaxMoments { mean, var } = self.moments;
        (1.0 - rho * rho + rho * rho * var) / (mean * mean)
    }

    /// Runs on an explicit Gaussian batch of at least `2^k` pairs.
    pub fn run(&self, batch: &PairBatch) -> Result<EstimateResult> {
        batch.expect_family(Family::Gaussian)?;
        check_full_k(self.k)?;
        let n = 1usize << self.k;
        if batch.len() < n {
            return Err(Error::Shape(format!("max scheme needs {n} pairs, batch has {}", batch.len())));
        }
        let w = argmax_first(&batch.x()[..n]);
        let mut transcript = Transcript::new();
        transcript.push_bits(Speaker::Alice, index_bits(w as u64, self.k as u32));
        let est = batch.y()[w] / self.moments.mean;
        Ok(EstimateResult::new(est, transcript, Diagnostics::default()))
    }

    /// Same output distribution as [`Self::run`] on a fresh batch of
    /// correlation `rho`, drawing only `(X_W, Y_W)`.
    pub fn sample<R: Rng + ?Sized>(&self, rho: f64, rng: &mut R) -> Result<EstimateResult> {
        check_rho(rho)?;
        let xw = sample_max_normal(self.k as f64 * LN_2, rng);
        let yw = correlated_partner(rho, xw, rng);
        let mut transcript = Transcript::new();
        transcript.push_elided(Speaker::Alice, self.k);
        Ok(EstimateResult::new(yw / self.moments.mean, transcript, Diagnostics::default()))
    }
}

/// `ρ̂ = Y_W / E[X_W]` with `W` the argmax of Alice's first `2^k` samples.
pub fn run_max_scheme(k: u64, batch: &PairBatch) -> Result<EstimateResult> {
    check_full_k(k)?;
    MaxScheme::new(k)?.run(batch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{gen_pairs, CorrelationModel};

    #[test]
    fn ties_pick_smallest_index() {
        assert_eq!(argmax_first(&[1.0, 3.0, 3.0, 2.0]), 1);
        assert_eq!(argmax_first(&[5.0]), 0);
    }

    #[test]
    fn full_run_uses_k_bits() {
        let b = gen_pairs(&CorrelationModel::gaussian(0.3).unwrap(), 1 << 8, 4).unwrap();
        let r = run_max_scheme(8, &b).unwrap();
        assert_eq!(r.bits_used, 8);
        let w = argmax_first(&b.x()[..256]);
        let s = MaxScheme::new(8).unwrap();
        assert_eq!(r.raw_estimate, b.y()[w] / s.moments().mean);
    }

    #[test]
    fn guards() {
        let b = gen_pairs(&CorrelationModel::gaussian(0.3).unwrap(), 100, 4).unwrap();
        assert!(run_max_scheme(8, &b).is_err());
        assert!(matches!(run_max_scheme(27, &b), Err(Error::SizeGuard(_))));
        let bin = gen_pairs(&CorrelationModel::binary(0.3).unwrap(), 256, 4).unwrap();
        assert!(matches!(run_max_scheme(8, &bin), Err(Error::FamilyMismatch { .. })));
        assert!(MaxScheme::new(0).is_err());
    }

    #[test]
    fn exact_mse_at_zero() {
        let s = MaxScheme::new(18).unwrap();
        let kmse = 18.0 * s.exact_mse(0.0);
        let unit = 1.0 / (2.0 * LN_2);
        assert!(kmse / unit > 1.0 && kmse / unit < 1.35);
    }
}
