//! Alice sends her first `k` binary samples verbatim.

use super::transcript::{Diagnostics, EstimateResult, Speaker, Transcript};
use crate::error::{Error, Result};
use crate::model::{Family, PairBatch};

/// `ρ̂ = (1/k) Σ_{j≤k} X_j Y_j` from `k` raw bits of Alice's sequence.
pub fn run_naive(k: u64, batch: &PairBatch) -> Result<EstimateResult> {
    batch.expect_family(Family::Binary)?;
    if k == 0 {
        return Err(Error::ParameterDomain("k must be at least 1".into()));
    }
    let k_us = k as usize;
    if batch.len() < k_us {
        return Err(Error::Shape(format!("naive scheme needs {k} pairs, batch has {}", batch.len())));
    }
    let x = &batch.x()[..k_us];
    let y = &batch.y()[..k_us];
    let mut transcript = Transcript::new();
    transcript.push_bits(Speaker::Alice, x.iter().map(|v| *v > 0.0).collect());
    let est = x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / k as f64;
    Ok(EstimateResult::new(est, transcript, Diagnostics::default()))
}
