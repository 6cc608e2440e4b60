//! Correlated pair sources and the two source transformations used by the
//! protocols: the common-randomness correlation shift and the block-sum
//! binary→Gaussian preprocessor.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{domain, Error, Result};
use crate::rng;

/// Source family of a correlated pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Uniform ±1 marginals with `P[X = Y] = (1 + ρ) / 2`.
    Binary,
    /// Standard normal marginals with `E[XY] = ρ`.
    Gaussian,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Binary => f.write_str("binary"),
            Family::Gaussian => f.write_str("gaussian"),
        }
    }
}

fn family_mismatch(expected: Family, got: Family) -> Error {
    Error::FamilyMismatch {
        expected: expected.to_string(),
        got: got.to_string(),
    }
}

pub(crate) fn check_rho(rho: f64) -> Result<()> {
    if rho.is_finite() && rho.abs() <= 1.0 {
        Ok(())
    } else {
        Err(domain(format!("correlation must lie in [-1, 1], got {rho}")))
    }
}

/// A source family together with its single unknown parameter ρ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationModel {
    family: Family,
    rho: f64,
}

impl CorrelationModel {
    pub fn new(family: Family, rho: f64) -> Result<Self> {
        check_rho(rho)?;
        Ok(Self { family, rho })
    }

    pub fn binary(rho: f64) -> Result<Self> {
        Self::new(Family::Binary, rho)
    }

    pub fn gaussian(rho: f64) -> Result<Self> {
        Self::new(Family::Gaussian, rho)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }
}

/// `n` aligned sample pairs: Alice holds `x`, Bob holds `y`.
///
/// Binary samples are stored as `±1.0` so that both families share one
/// batch type; construction rejects any other value for binary batches.
#[derive(Debug, Clone, PartialEq)]
pub struct PairBatch {
    family: Family,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl PairBatch {
    pub fn new(family: Family, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Shape(format!(
                "columns differ in length: {} vs {}",
                x.len(),
                y.len()
            )));
        }
        if x.is_empty() {
            return Err(Error::Shape("batch must contain at least one pair".into()));
        }
        match family {
            Family::Binary => {
                if let Some(v) = x.iter().chain(&y).find(|v| **v != 1.0 && **v != -1.0) {
                    return Err(Error::Shape(format!("binary batch entry {v} is not ±1")));
                }
            }
            Family::Gaussian => {
                if x.iter().chain(&y).any(|v| !v.is_finite()) {
                    return Err(Error::Shape("gaussian batch contains a non-finite entry".into()));
                }
            }
        }
        Ok(Self { family, x, y })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Checks the batch family, for operations defined on one family only.
    pub fn expect_family(&self, family: Family) -> Result<()> {
        if self.family == family {
            Ok(())
        } else {
            Err(family_mismatch(family, self.family))
        }
    }

    /// Sub-batch of pairs `range`, same family.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<Self> {
        if range.end > self.len() || range.start >= range.end {
            return Err(Error::Shape(format!(
                "slice {range:?} out of bounds for batch of {}",
                self.len()
            )));
        }
        Ok(Self {
            family: self.family,
            x: self.x[range.clone()].to_vec(),
            y: self.y[range].to_vec(),
        })
    }

    /// `(1/n) Σ x_i y_i`, the moment estimator of ρ for unit-variance sources.
    pub fn mean_product(&self) -> f64 {
        self.x.iter().zip(&self.y).map(|(a, b)| a * b).sum::<f64>() / self.len() as f64
    }

    /// Sample Pearson correlation.
    pub fn pearson(&self) -> f64 {
        let n = self.len() as f64;
        let mx = self.x.iter().sum::<f64>() / n;
        let my = self.y.iter().sum::<f64>() / n;
        let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
        for (a, b) in self.x.iter().zip(&self.y) {
            let (da, db) = (a - mx, b - my);
            sxy += da * db;
            sxx += da * da;
            syy += db * db;
        }
        sxy / (sxx * syy).sqrt()
    }
}

/// Draws `n` iid pairs from `model`, deterministically in `seed`.
pub fn gen_pairs(model: &CorrelationModel, n: usize, seed: u64) -> Result<PairBatch> {
    if n == 0 {
        return Err(Error::Shape("n must be at least 1".into()));
    }
    let mut rng = rng::stream(seed, "gen_pairs");
    let (x, y) = sample_columns(model, n, &mut rng);
    Ok(PairBatch {
        family: model.family,
        x,
        y,
    })
}

/// Column sampler shared with the Monte Carlo paths, which draw from trial
/// substreams rather than a seed.
pub(crate) fn sample_columns<R: Rng + ?Sized>(model: &CorrelationModel, n: usize, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    match model.family {
        Family::Binary => {
            let agree = 0.5 * (1.0 + model.rho);
            for _ in 0..n {
                let a = if rng.random::<bool>() { 1.0 } else { -1.0 };
                let b = if rng.random::<f64>() < agree { a } else { -a };
                x.push(a);
                y.push(b);
            }
        }
        Family::Gaussian => {
            let rho = model.rho;
            let resid = (1.0 - rho * rho).max(0.0).sqrt();
            for _ in 0..n {
                let a: f64 = rng.sample(StandardNormal);
                let z: f64 = rng.sample(StandardNormal);
                x.push(a);
                y.push(rho * a + resid * z);
            }
        }
    }
    (x, y)
}

/// Parameters of the common-randomness correlation shift that maps a
/// `(0, ρ)` pair of hypotheses onto `(ρ0, ρ1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftParams {
    family: Family,
    alpha: f64,
    s: f64,
    rho0: f64,
    rho1: f64,
}

impl ShiftParams {
    /// Derives `α` and `s` for the requested pair of target correlations.
    ///
    /// Requires `ρ0 ∈ [(ρ1 − 1)/2, (ρ1 + 1)/2]` and `|ρ0| < 1`. The sign `s`
    /// is `+1` when `ρ0 = 0`.
    pub fn new(family: Family, rho0: f64, rho1: f64) -> Result<Self> {
        check_rho(rho1)?;
        check_rho(rho0)?;
        if rho0.abs() >= 1.0 {
            return Err(domain(format!("|rho0| must be < 1, got {rho0}")));
        }
        let lo = (rho1 - 1.0) / 2.0;
        let hi = (rho1 + 1.0) / 2.0;
        if rho0 < lo - 1e-15 || rho0 > hi + 1e-15 {
            return Err(domain(format!("rho0 = {rho0} outside [{lo}, {hi}] for rho1 = {rho1}")));
        }
        let s = if rho0 < 0.0 { -1.0 } else { 1.0 };
        let alpha = match family {
            Family::Binary => rho0.abs(),
            Family::Gaussian => rho0.abs().sqrt(),
        };
        Ok(Self {
            family,
            alpha,
            s,
            rho0,
            rho1,
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn sign(&self) -> f64 {
        self.s
    }

    pub fn rho0(&self) -> f64 {
        self.rho0
    }

    pub fn rho1(&self) -> f64 {
        self.rho1
    }

    /// Correlation the input batch must carry for the output to carry `ρ1`.
    pub fn input_rho(&self) -> f64 {
        (self.rho1 - self.rho0) / (1.0 - self.rho0.abs())
    }

    /// Output correlation for an input of correlation `rho`.
    pub fn output_rho(&self, rho: f64) -> f64 {
        let mix = match self.family {
            Family::Binary => self.alpha,
            Family::Gaussian => self.alpha * self.alpha,
        };
        self.s * mix + (1.0 - mix) * rho
    }
}

/// Applies the correlation shift with fresh shared randomness `W0`.
///
/// Gaussian: `X' = αZ + √(1−α²)X`, `Y' = sαZ + √(1−α²)Y`.
/// Binary: `X' = BZ + (1−B)X`, `Y' = sBZ + (1−B)Y` with `B ~ Ber(α)` and
/// `Z` uniform ±1, both shared by the two columns.
pub fn shift_correlation(batch: &PairBatch, params: &ShiftParams, seed: u64) -> Result<PairBatch> {
    batch.expect_family(params.family)?;
    let mut rng = rng::stream(seed, "shift_correlation");
    let n = batch.len();
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    match params.family {
        Family::Gaussian => {
            let keep = (1.0 - params.alpha * params.alpha).max(0.0).sqrt();
            for (a, b) in batch.x.iter().zip(&batch.y) {
                let z: f64 = rng.sample(StandardNormal);
                x.push(params.alpha * z + keep * a);
                y.push(params.s * params.alpha * z + keep * b);
            }
        }
        Family::Binary => {
            for (a, b) in batch.x.iter().zip(&batch.y) {
                let take_shared = rng.random::<f64>() < params.alpha;
                let z = if rng.random::<bool>() { 1.0 } else { -1.0 };
                if take_shared {
                    x.push(z);
                    y.push(params.s * z);
                } else {
                    x.push(*a);
                    y.push(*b);
                }
            }
        }
    }
    Ok(PairBatch {
        family: params.family,
        x,
        y,
    })
}

/// Default vanishing noise scale `a_t = t^(-1/4)` for [`binary_to_gaussian`].
pub fn default_noise_scale(t: usize) -> f64 {
    (t as f64).powf(-0.25)
}

/// Sums blocks of `t` binary pairs into approximately Gaussian pairs.
///
/// Output pair `j` is `(ΣA/√t + a_t N, ΣB/√t + a_t N')` over block `j`,
/// with independent standard normals `N`, `N'`. Each output coordinate has
/// variance `1 + a_t²` and the pair covariance is the binary ρ. The output
/// batch is tagged Gaussian.
pub fn binary_to_gaussian(batch: &PairBatch, t: usize, a_t: f64, seed: u64) -> Result<PairBatch> {
    batch.expect_family(Family::Binary)?;
    if t == 0 {
        return Err(Error::Shape("block length t must be positive".into()));
    }
    if batch.len() % t != 0 {
        return Err(Error::Shape(format!(
            "batch length {} not divisible by block length {t}",
            batch.len()
        )));
    }
    if !(a_t.is_finite() && a_t >= 0.0) {
        return Err(domain(format!("noise scale must be finite and >= 0, got {a_t}")));
    }
    let mut rng = rng::stream(seed, "binary_to_gaussian");
    let scale = 1.0 / (t as f64).sqrt();
    let blocks = batch.len() / t;
    let mut x = Vec::with_capacity(blocks);
    let mut y = Vec::with_capacity(blocks);
    for (xa, yb) in batch.x.chunks_exact(t).zip(batch.y.chunks_exact(t)) {
        let sa: f64 = xa.iter().sum();
        let sb: f64 = yb.iter().sum();
        let (nx, ny) = if a_t > 0.0 {
            (rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
        } else {
            (0.0, 0.0)
        };
        x.push(sa * scale + a_t * nx);
        y.push(sb * scale + a_t * ny);
    }
    Ok(PairBatch {
        family: Family::Gaussian,
        x,
        y,
    })
}
