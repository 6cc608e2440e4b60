//! Interchanged and injected information round-sums, and a randomized search
//! for the largest ratio between them.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::spec::{build_joint, normalized, random_row, InteractiveSpec, MAX_JOINT_ENTRIES};
use crate::error::{Error, Result};
use crate::info::{FiniteJoint, JointTable};
use crate::rng::substream;

/// Below this injected information the ratio is reported as 0.
pub const RATIO_S_FLOOR: f64 = 1e-6;

/// `R`, `S` and `R/S` for one protocol, plus the two closed forms
/// `I(X;Y) − I(X;Y|Uʳ)` and `I(Uʳ;X,Y)` they must equal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RSValue {
    pub r: f64,
    pub s: f64,
    pub ratio: f64,
    pub r_identity: f64,
    pub s_identity: f64,
}

impl RSValue {
    pub fn zero() -> Self {
        Self {
            r: 0.0,
            s: 0.0,
            ratio: 0.0,
            r_identity: 0.0,
            s_identity: 0.0,
        }
    }

    /// Largest disagreement between the round-sums and their closed forms.
    pub fn identity_gap(&self) -> f64 {
        (self.r - self.r_identity).abs().max((self.s - self.s_identity).abs())
    }
}

pub(crate) fn ratio_of(r: f64, s: f64) -> f64 {
    if s < RATIO_S_FLOOR {
        0.0
    } else {
        r / s
    }
}

/// Conditional informations below this are rounding residue and count as 0.
const ROUNDING_FLOOR: f64 = 1e-14;

fn denoise(v: f64) -> f64 {
    if v.abs() < ROUNDING_FLOOR {
        0.0
    } else {
        v
    }
}

/// Round-sums on a materialized joint with axes `(X, Y, U_1, …, U_r)`.
pub fn rs_from_joint(joint: &JointTable) -> RSValue {
    let rounds = joint.rank() - 2;
    let (mut r, mut s) = (0.0, 0.0);
    for i in 0..rounds {
        let past: Vec<usize> = (2..2 + i).collect();
        let u = [2 + i];
        let on_x = denoise(joint.cond_mi(&u, &[0], &past));
        let on_y = denoise(joint.cond_mi(&u, &[1], &past));
        // Round i + 1 is odd when i is even: Alice speaks, reading X.
        if i % 2 == 0 {
            r += on_y;
            s += on_x;
        } else {
            r += on_x;
            s += on_y;
        }
    }
    let all_u: Vec<usize> = (2..2 + rounds).collect();
    let r_identity = joint.mi(&[0], &[1]) - joint.cond_mi(&[0], &[1], &all_u);
    let s_identity = if rounds == 0 { 0.0 } else { joint.mi(&all_u, &[0, 1]) };
    RSValue {
        r,
        s,
        ratio: ratio_of(r, s),
        r_identity,
        s_identity,
    }
}

#[allow(non_snake_case)]
pub fn compute_R_S(spec: &InteractiveSpec, source: &FiniteJoint) -> Result<RSValue> {
    Ok(rs_from_joint(&build_joint(spec, source)?))
}

/// Knobs of the restart-and-climb search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub r_max: usize,
    pub u_max: usize,
    pub restarts: usize,
    pub climb_steps: usize,
    pub initial_step: f64,
    pub p_deterministic: f64,
    pub seed: u64,
}

impl SearchConfig {
    pub fn new(r_max: usize, u_max: usize, restarts: usize, seed: u64) -> Self {
        Self {
            r_max,
            u_max,
            restarts,
            climb_steps: 30,
            initial_step: 0.5,
            p_deterministic: 0.2,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best: RSValue,
    pub spec: InteractiveSpec,
    pub evaluations: u64,
}

pub fn search_max_ratio(
    source: &FiniteJoint,
    r_max: usize,
    u_alpha_max: usize,
    restarts: usize,
    seed: u64,
) -> Result<SearchResult> {
    search_max_ratio_with(source, &SearchConfig::new(r_max, u_alpha_max, restarts, seed))
}

pub(crate) fn check_search(source: &FiniteJoint, cfg: &SearchConfig) -> Result<()> {
    if cfg.u_max < 2 && cfg.r_max > 0 {
        return Err(Error::ParameterDomain("message alphabets need at least 2 symbols".into()));
    }
    let mut size = source.nx() as f64 * source.ny() as f64;
    for _ in 0..cfg.r_max {
        size *= cfg.u_max as f64;
    }
    if size > MAX_JOINT_ENTRIES as f64 {
        return Err(Error::SizeGuard(format!("search space joints exceed {MAX_JOINT_ENTRIES} entries")));
    }
    if !(cfg.initial_step > 0.0 && cfg.initial_step <= 1.0) {
        return Err(Error::ParameterDomain("initial step must lie in (0, 1]".into()));
    }
    Ok(())
}

fn evaluate(spec: &InteractiveSpec, source: &FiniteJoint) -> RSValue {
    // Inputs are validated up front, so construction cannot fail here.
    build_joint(spec, source).map_or_else(|_| RSValue::zero(), |j| rs_from_joint(&j))
}

/// One local move: either blend a single row with a fresh random row, or
/// pull a whole round's table toward uniform.
fn perturb<R: Rng + ?Sized>(spec: &InteractiveSpec, step: f64, p_det: f64, rng: &mut R) -> InteractiveSpec {
    let mut out = spec.clone();
    let rounds = out.rounds_mut();
    let round = &mut rounds[rng.random_range(0..rounds.len())];
    let a = round.alphabet;
    if rng.random::<bool>() {
        let j = rng.random_range(0..round.table.len());
        let fresh = random_row(a, p_det, rng);
        let row = &mut round.table[j];
        let mixed = row.iter().zip(&fresh).map(|(o, f)| (1.0 - step) * o + step * f).collect();
        *row = normalized(mixed);
    } else {
        let u = 1.0 / a as f64;
        for row in &mut round.table {
            let mixed = row.iter().map(|o| (1.0 - step) * o + step * u).collect();
            *row = normalized(mixed);
        }
    }
    out
}

/// One restart: a random protocol improved by `cfg.climb_steps` local
/// moves, with the step shrinking after every rejected move. Returns the
/// final value, the protocol and the number of evaluations.
pub(crate) fn climb(source: &FiniteJoint, cfg: &SearchConfig, index: u64) -> (RSValue, InteractiveSpec, u64) {
    let mut rng = substream(cfg.seed, "sdpi-search", index);
    let r = rng.random_range(1..=cfg.r_max);
    let mut cur = InteractiveSpec::random(source.nx(), source.ny(), r, cfg.u_max, cfg.p_deterministic, &mut rng);
    let mut val = evaluate(&cur, source);
    let mut evals = 1u64;
    let mut step = cfg.initial_step;
    for _ in 0..cfg.climb_steps {
        let cand = perturb(&cur, step, cfg.p_deterministic, &mut rng);
        let v = evaluate(&cand, source);
        evals += 1;
        if v.ratio > val.ratio {
            cur = cand;
            val = v;
        } else {
            step = (step * 0.8).max(1e-3);
        }
    }
    (val, cur, evals)
}

/// Randomized multi-restart hill climb over channel tables maximizing
/// `R/S`. Restarts run in parallel on independent substreams; the winner
/// is the first restart attaining the maximum, so the result is
/// deterministic for a fixed seed.
pub fn search_max_ratio_with(source: &FiniteJoint, cfg: &SearchConfig) -> Result<SearchResult> {
    check_search(source, cfg)?;
    let silent = InteractiveSpec::silent(source.nx(), source.ny());
    if cfg.r_max == 0 || cfg.restarts == 0 {
        return Ok(SearchResult {
            best: evaluate(&silent, source),
            spec: silent,
            evaluations: 1,
        });
    }
    let runs: Vec<(RSValue, InteractiveSpec, u64)> = (0..cfg.restarts as u64)
        .into_par_iter()
        .map(|i| climb(source, cfg, i))
        .collect();
    let evaluations = runs.iter().map(|r| r.2).sum();
    let (best, spec, _) = runs
        .into_iter()
        .reduce(|a, b| if b.0.ratio > a.0.ratio { b } else { a })
        .expect("at least one restart");
    Ok(SearchResult {
        best,
        spec,
        evaluations,
    })
}
