//! Tensorization of the symmetric SDPI constant across independent
//! coordinates.

use serde::{Deserialize, Serialize};

use super::ratio::{compute_R_S, search_max_ratio_with, SearchConfig};
use super::spec::InteractiveSpec;
use crate::error::Result;
use crate::info::FiniteJoint;

/// Allowance for the search underestimating each coordinate's supremum.
pub const SEARCH_SLACK: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TensorReport {
    pub ratio: f64,
    /// Best ratio found on each coordinate.
    pub per_coordinate: [f64; 2],
    /// `max(per_coordinate) + SEARCH_SLACK`.
    pub ceiling: f64,
    pub margin: f64,
    pub passed: bool,
}

/// Holds the per-coordinate search estimates so many product specs can be
/// checked against them.
#[derive(Debug, Clone)]
pub struct TensorChecker {
    source1: FiniteJoint,
    source2: FiniteJoint,
    product: FiniteJoint,
    per_coordinate: [f64; 2],
}

impl TensorChecker {
    pub fn new(source1: FiniteJoint, source2: FiniteJoint, search: &SearchConfig) -> Result<Self> {
        let s1 = search_max_ratio_with(&source1, search)?.best.ratio;
        let mut second = *search;
        second.seed = search.seed.wrapping_add(1);
        let s2 = search_max_ratio_with(&source2, &second)?.best.ratio;
        Ok(Self::with_estimates(source1, source2, [s1, s2]))
    }

    /// Uses externally supplied per-coordinate estimates.
    pub fn with_estimates(source1: FiniteJoint, source2: FiniteJoint, per_coordinate: [f64; 2]) -> Self {
        let product = source1.tensor(&source2);
        Self {
            source1,
            source2,
            product,
            per_coordinate,
        }
    }

    pub fn sources(&self) -> (&FiniteJoint, &FiniteJoint) {
        (&self.source1, &self.source2)
    }

    pub fn product(&self) -> &FiniteJoint {
        &self.product
    }

    pub fn per_coordinate(&self) -> [f64; 2] {
        self.per_coordinate
    }

    pub fn check(&self, spec: &InteractiveSpec) -> Result<TensorReport> {
        let ratio = compute_R_S(spec, &self.product)?.ratio;
        let ceiling = self.per_coordinate[0].max(self.per_coordinate[1]) + SEARCH_SLACK;
        let margin = ceiling - ratio;
        Ok(TensorReport {
            ratio,
            per_coordinate: self.per_coordinate,
            ceiling,
            margin,
            passed: margin >= 0.0,
        })
    }
}

pub fn verify_tensorization(
    source1: &FiniteJoint,
    source2: &FiniteJoint,
    spec: &InteractiveSpec,
    search: &SearchConfig,
) -> Result<TensorReport> {
    TensorChecker::new(source1.clone(), source2.clone(), search)?.check(spec)
}
