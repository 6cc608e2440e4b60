//! Randomized verification sweeps and replayable violation instances.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::chain::{
    chain_report_from_joints, corrupted_chain_fixture, gap_hamming_demo, verify_interactive_chain,
    verify_shift_reduction, CHAIN_TOL,
};
use super::ratio::{check_search, climb, compute_R_S, SearchConfig};
use super::spec::{binary_product_source, random_row, InteractiveSpec};
use super::tensor::TensorChecker;
use super::tilted::{binary_input_contraction, verify_tilted_sdpi};
use crate::error::{Error, Result};
use crate::info::{FiniteJoint, JointTable};
use crate::rng::substream;

/// Violations kept per suite; the counts cover all of them.
pub const MAX_RECORDED_VIOLATIONS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Sdpi,
    Tilted,
    Contraction,
    Tensor,
    Chain,
    Shift,
    GapHamming,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Sdpi,
        Suite::Tilted,
        Suite::Contraction,
        Suite::Tensor,
        Suite::Chain,
        Suite::Shift,
        Suite::GapHamming,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Sdpi => "sdpi",
            Suite::Tilted => "tilted",
            Suite::Contraction => "contraction",
            Suite::Tensor => "tensor",
            Suite::Chain => "chain",
            Suite::Shift => "shift",
            Suite::GapHamming => "gaphamming",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown suite '{s}'")))
    }
}

/// A single checkable instance. Every verifier failure is reported with
/// the instance that produced it, which [`Instance::check`] re-runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Instance {
    Ratio {
        source: FiniteJoint,
        spec: InteractiveSpec,
        ceiling: f64,
    },
    Tilted {
        rho: f64,
        f: Vec<f64>,
        g: Vec<f64>,
        channel_u: Vec<Vec<f64>>,
        channel_v: Vec<Vec<f64>>,
    },
    Contraction {
        p: Vec<f64>,
        q: Vec<f64>,
        channel: Vec<Vec<f64>>,
        prior_a: Vec<f64>,
    },
    Tensor {
        source1: FiniteJoint,
        source2: FiniteJoint,
        per_coordinate: [f64; 2],
        spec: InteractiveSpec,
    },
    Chain {
        source: FiniteJoint,
        spec: InteractiveSpec,
        rho: f64,
    },
    ChainJoints {
        actual: JointTable,
        reference: JointTable,
        rho: f64,
        one_way: bool,
    },
    Shift {
        rho0: f64,
        rho1: f64,
        spec: InteractiveSpec,
    },
    GapHamming {
        n: usize,
        c: f64,
        spec: InteractiveSpec,
    },
}

/// Outcome of checking one instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub passed: bool,
    /// Smallest slack over the inequalities; negative means violated.
    pub margin: f64,
}

// Deserialized tables bypass the constructors, so re-run their checks.
fn joint(j: &FiniteJoint) -> Result<FiniteJoint> {
    FiniteJoint::new(j.nx(), j.ny(), j.probs().to_vec())
}

fn spec(s: &InteractiveSpec) -> Result<InteractiveSpec> {
    InteractiveSpec::new(s.nx(), s.ny(), s.rounds().to_vec())
}

fn table(t: &JointTable) -> Result<JointTable> {
    JointTable::new(t.dims().to_vec(), t.probs().to_vec())
}

impl Instance {
    pub fn check(&self) -> Result<Check> {
        Ok(match self {
            Instance::Ratio { source, spec: s, ceiling } => {
                let v = compute_R_S(&spec(s)?, &joint(source)?)?;
                let margin = ceiling - v.ratio;
                Check {
                    passed: margin >= -CHAIN_TOL && v.identity_gap() <= CHAIN_TOL,
                    margin,
                }
            }
            Instance::Tilted {
                rho,
                f,
                g,
                channel_u,
                channel_v,
            } => {
                let r = verify_tilted_sdpi(*rho, f, g, channel_u, channel_v)?;
                Check {
                    passed: r.passed,
                    margin: r.margin(),
                }
            }
            Instance::Contraction { p, q, channel, prior_a } => {
                let r = binary_input_contraction(p, q, channel, prior_a)?;
                Check {
                    passed: r.passed,
                    margin: r.margin,
                }
            }
            Instance::Tensor {
                source1,
                source2,
                per_coordinate,
                spec: s,
            } => {
                let checker = TensorChecker::with_estimates(joint(source1)?, joint(source2)?, *per_coordinate);
                let r = checker.check(&spec(s)?)?;
                Check {
                    passed: r.passed,
                    margin: r.margin,
                }
            }
            Instance::Chain { source, spec: s, rho } => {
                let r = verify_interactive_chain(&joint(source)?, &spec(s)?, *rho)?;
                Check {
                    passed: r.passed,
                    margin: r.margin,
                }
            }
            Instance::ChainJoints {
                actual,
                reference,
                rho,
                one_way,
            } => {
                let r = chain_report_from_joints(&table(actual)?, &table(reference)?, *rho, *one_way)?;
                Check {
                    passed: r.passed,
                    margin: r.margin,
                }
            }
            Instance::Shift { rho0, rho1, spec: s } => {
                let r = verify_shift_reduction(*rho0, *rho1, &spec(s)?)?;
                Check {
                    passed: r.passed,
                    margin: r.margin,
                }
            }
            Instance::GapHamming { n, c, spec: s } => {
                let r = gap_hamming_demo(*n, &spec(s)?, *c)?;
                Check {
                    passed: r.passed,
                    margin: r.margin,
                }
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub suite: String,
    pub index: u64,
    pub margin: f64,
    pub instance: Instance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub suite: String,
    pub draws: u64,
    pub passed: u64,
    pub failed: u64,
    /// Smallest margin seen; `None` when nothing was drawn.
    pub worst_margin: Option<f64>,
    /// Suite-specific statistics, e.g. the best ratio a search reached.
    pub stats: BTreeMap<String, f64>,
    pub violations: Vec<Violation>,
}

impl SuiteSummary {
    pub fn ok(&self) -> bool {
        self.failed == 0
    }
}

fn summarize(suite: &str, draws: u64, outcomes: Vec<(Instance, Check)>) -> SuiteSummary {
    let mut s = SuiteSummary {
        suite: suite.to_string(),
        draws,
        passed: 0,
        failed: 0,
        worst_margin: None,
        stats: BTreeMap::new(),
        violations: Vec::new(),
    };
    for (index, (instance, check)) in outcomes.into_iter().enumerate() {
        s.worst_margin = Some(s.worst_margin.map_or(check.margin, |w| w.min(check.margin)));
        if check.passed {
            s.passed += 1;
        } else {
            s.failed += 1;
            if s.violations.len() < MAX_RECORDED_VIOLATIONS {
                s.violations.push(Violation {
                    suite: suite.to_string(),
                    index: index as u64,
                    margin: check.margin,
                    instance,
                });
            }
        }
    }
    s
}

fn run_draws<F>(suite: Suite, draws: u64, seed: u64, draw: F) -> Result<SuiteSummary>
where
    F: Fn(&mut crate::rng::SimRng) -> Result<Instance> + Sync,
{
    let outcomes = (0..draws)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, suite.name(), i);
            let inst = draw(&mut rng)?;
            let check = inst.check()?;
            Ok((inst, check))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(suite.name(), draws, outcomes))
}

fn positive_weights<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| 0.01 + rng.random::<f64>()).collect()
}

fn channel<R: Rng + ?Sized>(inputs: usize, outputs: usize, p_det: f64, rng: &mut R) -> Vec<Vec<f64>> {
    (0..inputs).map(|_| random_row(outputs, p_det, rng)).collect()
}

/// Correlation of the ratio-ceiling sweep.
pub const SDPI_RHO: f64 = 0.6;
/// Correlation of the tilted sweep.
pub const TILTED_RHO: f64 = 0.7;
/// Correlations the chain sweep cycles through.
pub const CHAIN_RHOS: [f64; 3] = [0.3, 0.6, 0.9];
/// `(ρ0, ρ1)` of the shift sweep.
pub const SHIFT_PAIR: (f64, f64) = (0.25, 0.5);
/// Coordinates of the tensorization sweep.
pub const TENSOR_RHOS: (f64, f64) = (0.5, 0.3);
/// Size and scale of the Gap-Hamming sweep.
pub const GAP_HAMMING: (usize, f64) = (8, 1.0);

/// Runs `draws` random instances of `suite`, in parallel, on substreams
/// of `seed`.
pub fn run_suite(suite: Suite, draws: u64, seed: u64) -> Result<SuiteSummary> {
    match suite {
        Suite::Sdpi => {
            let source = FiniteJoint::binary_symmetric(SDPI_RHO)?;
            let cfg = SearchConfig::new(3, 3, draws as usize, seed);
            check_search(&source, &cfg)?;
            let ceiling = SDPI_RHO * SDPI_RHO;
            let mut best = 0.0f64;
            let outcomes = (0..draws)
                .into_par_iter()
                .map(|i| {
                    let (_, s, _) = climb(&source, &cfg, i);
                    let inst = Instance::Ratio {
                        source: source.clone(),
                        spec: s,
                        ceiling,
                    };
                    let check = inst.check()?;
                    Ok((inst, check))
                })
                .collect::<Result<Vec<_>>>()?;
            for (_, c) in &outcomes {
                best = best.max(ceiling - c.margin);
            }
            let mut summary = summarize(suite.name(), draws, outcomes);
            summary.stats.insert("best_ratio".into(), best);
            summary.stats.insert("ceiling".into(), ceiling);
            Ok(summary)
        }
        Suite::Tilted => run_draws(suite, draws, seed, |rng| {
            let nu = rng.random_range(2..=4);
            let nv = rng.random_range(2..=4);
            Ok(Instance::Tilted {
                rho: TILTED_RHO,
                f: positive_weights(2, rng),
                g: positive_weights(2, rng),
                channel_u: channel(2, nu, 0.2, rng),
                channel_v: channel(2, nv, 0.2, rng),
            })
        }),
        Suite::Contraction => run_draws(suite, draws, seed, |rng| {
            let nb = rng.random_range(2..=4);
            let nu = rng.random_range(2..=4);
            Ok(Instance::Contraction {
                p: random_row(nb, 0.1, rng),
                q: random_row(nb, 0.1, rng),
                channel: channel(2, nu, 0.2, rng),
                prior_a: random_row(2, 0.0, rng),
            })
        }),
        Suite::Tensor => {
            let (r1, r2) = TENSOR_RHOS;
            let cfg = SearchConfig::new(3, 3, 500, seed ^ 0x7e45);
            let checker = TensorChecker::new(FiniteJoint::binary_symmetric(r1)?, FiniteJoint::binary_symmetric(r2)?, &cfg)?;
            let per = checker.per_coordinate();
            let (s1, s2) = checker.sources();
            let mut summary = run_draws(suite, draws, seed, |rng| {
                let r = rng.random_range(1..=2);
                Ok(Instance::Tensor {
                    source1: s1.clone(),
                    source2: s2.clone(),
                    per_coordinate: per,
                    spec: InteractiveSpec::random(4, 4, r, 3, 0.2, rng),
                })
            })?;
            summary.stats.insert("coordinate1_ratio".into(), per[0]);
            summary.stats.insert("coordinate2_ratio".into(), per[1]);
            Ok(summary)
        }
        Suite::Chain => {
            let sources = [1usize, 2]
                .into_iter()
                .flat_map(|n| CHAIN_RHOS.map(|rho| (n, rho)))
                .map(|(n, rho)| binary_product_source(rho, n).map(|s| (n, rho, s)))
                .collect::<Result<Vec<_>>>()?;
            run_draws(suite, draws, seed, |rng| {
                let (n, rho, source) = &sources[rng.random_range(0..sources.len())];
                let side = 1usize << n;
                let r = rng.random_range(0..=3);
                Ok(Instance::Chain {
                    source: source.clone(),
                    spec: InteractiveSpec::random(side, side, r, 3, 0.2, rng),
                    rho: *rho,
                })
            })
        }
        Suite::Shift => run_draws(suite, draws, seed, |rng| {
            let r = rng.random_range(1..=3);
            Ok(Instance::Shift {
                rho0: SHIFT_PAIR.0,
                rho1: SHIFT_PAIR.1,
                spec: InteractiveSpec::random(2, 2, r, 3, 0.2, rng),
            })
        }),
        Suite::GapHamming => run_draws(suite, draws, seed, |rng| {
            let (n, c) = GAP_HAMMING;
            let side = 1usize << n;
            let r = rng.random_range(1..=2);
            Ok(Instance::GapHamming {
                n,
                c,
                spec: InteractiveSpec::random(side, side, r, 3, 0.3, rng),
            })
        }),
    }
}

/// Self-test: a chain check on a joint no protocol can produce. The
/// returned summary must report a violation.
pub fn run_injected_fixture() -> Result<SuiteSummary> {
    let rho = 0.5;
    let (actual, reference) = corrupted_chain_fixture(rho)?;
    let inst = Instance::ChainJoints {
        actual,
        reference,
        rho,
        one_way: false,
    };
    let check = inst.check()?;
    Ok(summarize("injected", 1, vec![(inst, check)]))
}
