//! Leading-order risk formulas for `k`-bit correlation estimation. These
//! drop all `o(1)` corrections and serve as asymptotic references.

use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;

use crate::error::{domain, Result};

/// Closed-form risk references at one `(k, ρ)`, in squared-error units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundSet {
    pub k: u64,
    pub rho: f64,
    /// Global minimax risk `1/(2k ln2)`.
    pub global_upper: f64,
    /// Local minimax achievability `(1−ρ²)²/(2k ln2)`.
    pub local_upper: f64,
    /// Local minimax converse `(1−|ρ|)²/(2k ln2)`.
    pub local_lower: f64,
    /// Risk of sending `k` raw samples, `(1−ρ²)/k`.
    pub naive_risk: f64,
    /// Risk of the argmax-index scheme, `(1−ρ²)/(2k ln2)`.
    pub max_scheme_risk: f64,
}

pub fn risk_bounds(k: u64, rho: f64) -> Result<BoundSet> {
    if k == 0 {
        return Err(domain("k must be at least 1"));
    }
    crate::model::check_rho(rho)?;
    let base = 1.0 / (2.0 * k as f64 * LN_2);
    let one_minus_sq = 1.0 - rho * rho;
    Ok(BoundSet {
        k,
        rho,
        global_upper: base,
        local_upper: one_minus_sq * one_minus_sq * base,
        local_lower: (1.0 - rho.abs()).powi(2) * base,
        naive_risk: one_minus_sq / k as f64,
        max_scheme_risk: one_minus_sq * base,
    })
}
