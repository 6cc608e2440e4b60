//! Finite interactive protocols as stacks of conditional tables, and their
//! joint law with a source.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::info::{FiniteJoint, JointTable};

/// Largest joint table any verifier will materialize.
pub const MAX_JOINT_ENTRIES: usize = 10_000_000;

/// `P(U_i | input, U^{i−1})` for one round. Row `v·H + h` holds the pmf of
/// `U_i` given input symbol `v` and flattened history `h`, where `H` is the
/// product of the earlier alphabet sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundChannel {
    pub alphabet: usize,
    pub table: Vec<Vec<f64>>,
}

/// An `r`-round protocol: odd rounds (1-based) read Alice's `X`, even
/// rounds read Bob's `Y`, and every round reads the full history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractiveSpec {
    nx: usize,
    ny: usize,
    rounds: Vec<RoundChannel>,
}

fn check_row(row: &[f64]) -> Result<()> {
    if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidPmf("channel row has a negative or non-finite entry".into()));
    }
    let s: f64 = row.iter().sum();
    if (s - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidPmf(format!("channel row sums to {s}")));
    }
    Ok(())
}

impl InteractiveSpec {
    pub fn new(nx: usize, ny: usize, rounds: Vec<RoundChannel>) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::Shape("input alphabets must be nonempty".into()));
        }
        let mut history = 1usize;
        for (i, ch) in rounds.iter().enumerate() {
            let input = if i % 2 == 0 { nx } else { ny };
            if ch.alphabet == 0 {
                return Err(Error::Shape(format!("round {} has an empty alphabet", i + 1)));
            }
            if ch.table.len() != input * history {
                return Err(Error::Shape(format!(
                    "round {} needs {} rows, has {}",
                    i + 1,
                    input * history,
                    ch.table.len()
                )));
            }
            for row in &ch.table {
                if row.len() != ch.alphabet {
                    return Err(Error::Shape(format!("round {} has a row of the wrong width", i + 1)));
                }
                check_row(row)?;
            }
            history = history
                .checked_mul(ch.alphabet)
                .ok_or_else(|| Error::SizeGuard("history alphabet overflows".into()))?;
        }
        Ok(Self { nx, ny, rounds })
    }

    /// The protocol with no messages.
    pub fn silent(nx: usize, ny: usize) -> Self {
        Self {
            nx,
            ny,
            rounds: Vec::new(),
        }
    }

    /// Single message from Alice with `P(U | X = x) = channel[x]`.
    pub fn one_way(nx: usize, ny: usize, channel: Vec<Vec<f64>>) -> Result<Self> {
        let alphabet = channel.first().map_or(0, Vec::len);
        Self::new(nx, ny, vec![RoundChannel { alphabet, table: channel }])
    }

    /// Alice sends `f(x)` for a deterministic `f` into `alphabet` symbols.
    pub fn one_way_deterministic(nx: usize, ny: usize, alphabet: usize, f: impl Fn(usize) -> usize) -> Result<Self> {
        let table = (0..nx)
            .map(|x| {
                let mut row = vec![0.0; alphabet];
                row[f(x)] = 1.0;
                row
            })
            .collect();
        Self::one_way(nx, ny, table)
    }

    /// Every round emits a single symbol.
    pub fn constant(nx: usize, ny: usize, rounds: usize) -> Self {
        let mut spec = Self::silent(nx, ny);
        for i in 0..rounds {
            let input = if i % 2 == 0 { nx } else { ny };
            spec.rounds.push(RoundChannel {
                alphabet: 1,
                table: vec![vec![1.0]; input],
            });
        }
        spec
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn rounds(&self) -> &[RoundChannel] {
        &self.rounds
    }

    pub(crate) fn rounds_mut(&mut self) -> &mut [RoundChannel] {
        &mut self.rounds
    }

    pub fn num_rounds(&self) -> usize {
        self.rounds.len()
    }

    /// Alphabet sizes `|U_1|, …, |U_r|`.
    pub fn alphabets(&self) -> Vec<usize> {
        self.rounds.iter().map(|r| r.alphabet).collect()
    }

    /// Sum of `log₂ |U_i|`: the fixed-length cost of the transcript.
    pub fn message_bits(&self) -> f64 {
        self.rounds.iter().map(|r| (r.alphabet as f64).log2()).sum()
    }

    /// Only Alice ever says anything: every Bob round is constant.
    pub fn is_one_way(&self) -> bool {
        self.rounds.iter().skip(1).step_by(2).all(|r| r.alphabet == 1)
    }

    /// Random protocol with `r` rounds and alphabets in `2..=u_max`. Rows
    /// are uniform on the simplex, except that with probability
    /// `p_deterministic` a row is a point mass.
    pub fn random<R: Rng + ?Sized>(
        nx: usize,
        ny: usize,
        r: usize,
        u_max: usize,
        p_deterministic: f64,
        rng: &mut R,
    ) -> Self {
        let mut history = 1usize;
        let mut rounds = Vec::with_capacity(r);
        for i in 0..r {
            let input = if i % 2 == 0 { nx } else { ny };
            let alphabet = rng.random_range(2..=u_max.max(2));
            let table = (0..input * history)
                .map(|_| random_row(alphabet, p_deterministic, rng))
                .collect();
            rounds.push(RoundChannel { alphabet, table });
            history *= alphabet;
        }
        Self { nx, ny, rounds }
    }

    /// Size of the joint table over `(X, Y, U^r)`.
    pub fn joint_size(&self) -> Option<usize> {
        self.rounds
            .iter()
            .try_fold(self.nx * self.ny, |acc, r| acc.checked_mul(r.alphabet))
    }
}

/// Uniform point on the simplex, or a point mass with probability
/// `p_deterministic`.
pub fn random_row<R: Rng + ?Sized>(alphabet: usize, p_deterministic: f64, rng: &mut R) -> Vec<f64> {
    if rng.random::<f64>() < p_deterministic {
        let mut row = vec![0.0; alphabet];
        row[rng.random_range(0..alphabet)] = 1.0;
        return row;
    }
    let raw: Vec<f64> = (0..alphabet).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    normalized(raw)
}

pub(crate) fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    for x in &mut v {
        *x /= s;
    }
    // Push the rounding residue into the largest entry so rows sum to one.
    let resid = 1.0 - v.iter().sum::<f64>();
    if let Some(m) = v.iter_mut().max_by(|a, b| a.total_cmp(b)) {
        *m += resid;
    }
    v
}

/// The `n`-fold product of binary symmetric pairs with correlation ρ:
/// `X, Y ∈ {±1}^n` indexed by the bits of the coordinate signs.
pub fn binary_product_source(rho: f64, n: usize) -> Result<FiniteJoint> {
    if n == 0 {
        return Err(Error::Shape("n must be at least 1".into()));
    }
    let one = FiniteJoint::binary_symmetric(rho)?;
    let mut j = one.clone();
    for _ in 1..n {
        j = j.tensor(&one);
    }
    Ok(j)
}

/// Joint law of `(X, Y, U_1, …, U_r)` with axes in that order.
pub fn build_joint(spec: &InteractiveSpec, source: &FiniteJoint) -> Result<JointTable> {
    if spec.nx != source.nx() || spec.ny != source.ny() {
        return Err(Error::AlphabetMismatch(format!(
            "spec expects {}x{} inputs, source is {}x{}",
            spec.nx,
            spec.ny,
            source.nx(),
            source.ny()
        )));
    }
    let size = spec
        .joint_size()
        .filter(|s| *s <= MAX_JOINT_ENTRIES)
        .ok_or_else(|| Error::SizeGuard(format!("joint table exceeds {MAX_JOINT_ENTRIES} entries")))?;
    let mut probs = source.probs().to_vec();
    probs.reserve(size.saturating_sub(probs.len()));
    let mut dims = vec![spec.nx, spec.ny];
    let mut history = 1usize;
    for (i, ch) in spec.rounds.iter().enumerate() {
        let reads_x = i % 2 == 0;
        let mut next = Vec::with_capacity(probs.len() * ch.alphabet);
        for (flat, &p) in probs.iter().enumerate() {
            let h = flat % history;
            let xy = flat / history;
            let v = if reads_x { xy / spec.ny } else { xy % spec.ny };
            let row = &ch.table[v * history + h];
            next.extend(row.iter().map(|c| p * c));
        }
        probs = next;
        dims.push(ch.alphabet);
        history *= ch.alphabet;
    }
    JointTable::new(dims, probs)
}
