//! Public-board transcripts with fixed-length bit accounting, and the
//! result type every scheme returns.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    Alice,
    Bob,
}

/// Message contents. Monte Carlo paths that never need the literal bits
/// record only their count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Payload {
    Bits(Vec<bool>),
    Elided,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub speaker: Speaker,
    pub bit_count: u64,
    pub payload: Payload,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    messages: Vec<Message>,
    common_randomness: Option<u64>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_common_randomness(seed: u64) -> Self {
        Self {
            messages: Vec::new(),
            common_randomness: Some(seed),
        }
    }

    pub fn common_randomness(&self) -> Option<u64> {
        self.common_randomness
    }

    pub fn push_bits(&mut self, speaker: Speaker, bits: Vec<bool>) {
        self.messages.push(Message {
            speaker,
            bit_count: bits.len() as u64,
            payload: Payload::Bits(bits),
        });
    }

    pub fn push_elided(&mut self, speaker: Speaker, bit_count: u64) {
        self.messages.push(Message {
            speaker,
            bit_count,
            payload: Payload::Elided,
        });
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    pub fn total_bits(&self) -> u64 {
        self.messages.iter().map(|m| m.bit_count).sum()
    }

    /// Fails if the transcript spends more than `k` bits.
    pub fn check_budget(&self, k: u64) -> Result<()> {
        let used = self.total_bits();
        if used > k {
            return Err(Error::ParameterDomain(format!("transcript uses {used} bits, budget {k}")));
        }
        Ok(())
    }
}

/// The `width` low bits of `value`, most significant first.
pub fn index_bits(value: u64, width: u32) -> Vec<bool> {
    (0..width).rev().map(|b| (value >> b) & 1 == 1).collect()
}

/// Inverse of [`index_bits`].
pub fn bits_to_index(bits: &[bool]) -> u64 {
    bits.iter().fold(0, |acc, &b| (acc << 1) | u64::from(b))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Bob found zero or several candidates and used the fallback.
    pub decode_failure: bool,
    /// Alice found no block meeting her selection rule.
    pub search_failure: bool,
    /// Bob decoded a unique candidate that was not Alice's index.
    pub wrong_decode: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    /// Estimate truncated to `[−1, 1]`.
    pub rho_hat: f64,
    /// Estimate before truncation.
    pub raw_estimate: f64,
    pub bits_used: u64,
    pub transcript: Transcript,
    pub diagnostics: Diagnostics,
}

impl EstimateResult {
    pub fn new(raw_estimate: f64, transcript: Transcript, diagnostics: Diagnostics) -> Self {
        Self {
            rho_hat: raw_estimate.clamp(-1.0, 1.0),
            raw_estimate,
            bits_used: transcript.total_bits(),
            transcript,
            diagnostics,
        }
    }
}
