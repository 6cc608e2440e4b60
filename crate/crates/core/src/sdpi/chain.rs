//! Exact divergence chains for interactive protocols: the interchanged and
//! injected information bounds, the correlation-shift reduction and the
//! Gap-Hamming mixture argument.

use serde::{Deserialize, Serialize};

use super::spec::{binary_product_source, build_joint, InteractiveSpec, RoundChannel};
use crate::error::{Error, Result};
use crate::info::{FiniteJoint, JointTable};
use crate::model::{Family, ShiftParams};

/// Tolerance of the exact-identity and chain checks.
pub const CHAIN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    /// `D(P_ΠX ‖ P̄_ΠX)`.
    pub d_pix: f64,
    /// `D(P_ΠY ‖ P̄_ΠY)`.
    pub d_piy: f64,
    /// `I(X;Y) − I(X;Y|Π)`.
    pub interchanged: f64,
    /// `I(Π;X,Y)`.
    pub injected: f64,
    pub rho_sq_injected: f64,
    pub one_way: bool,
    /// `|d_piy − interchanged|`, only constrained for one-way protocols.
    pub one_way_gap: f64,
    /// Smallest slack over the inequalities checked.
    pub margin: f64,
    pub passed: bool,
}

fn kl_marginal(p: &JointTable, q: &JointTable, axes: &[usize]) -> Result<f64> {
    p.marginal(axes).kl_to(&q.marginal(axes))
}

/// Chain quantities from materialized joints with axes `(X, Y, Π…)`:
/// `actual` under the source, `reference` under the independent coupling
/// with the same marginals.
pub fn chain_report_from_joints(actual: &JointTable, reference: &JointTable, rho: f64, one_way: bool) -> Result<ChainReport> {
    if actual.dims() != reference.dims() {
        return Err(Error::AlphabetMismatch(format!(
            "joints with dims {:?} and {:?}",
            actual.dims(),
            reference.dims()
        )));
    }
    if actual.rank() < 2 {
        return Err(Error::Shape("joint must carry X and Y axes".into()));
    }
    let pi: Vec<usize> = (2..actual.rank()).collect();
    let with = |v: usize| -> Vec<usize> { std::iter::once(v).chain(pi.iter().copied()).collect() };
    let d_pix = kl_marginal(actual, reference, &with(0))?;
    let d_piy = kl_marginal(actual, reference, &with(1))?;
    let interchanged = actual.mi(&[0], &[1]) - actual.cond_mi(&[0], &[1], &pi);
    let injected = if pi.is_empty() { 0.0 } else { actual.mi(&pi, &[0, 1]) };
    let rho_sq_injected = rho * rho * injected;
    let margin = [
        interchanged - d_pix.max(d_piy),
        rho_sq_injected - interchanged,
        injected - d_pix,
        injected - d_piy,
    ]
    .into_iter()
    .fold(f64::INFINITY, f64::min);
    let one_way_gap = (d_piy - interchanged).abs();
    let passed = margin >= -CHAIN_TOL && (!one_way || one_way_gap <= CHAIN_TOL);
    Ok(ChainReport {
        d_pix,
        d_piy,
        interchanged,
        injected,
        rho_sq_injected,
        one_way,
        one_way_gap,
        margin,
        passed,
    })
}

/// Runs `spec` on `source` and on its independent coupling and evaluates
/// both chain inequalities, the one-way equality and the DPI sanity checks.
pub fn verify_interactive_chain(source: &FiniteJoint, spec: &InteractiveSpec, rho: f64) -> Result<ChainReport> {
    let actual = build_joint(spec, source)?;
    let reference = build_joint(spec, &source.independent_part())?;
    chain_report_from_joints(&actual, &reference, rho, spec.is_one_way())
}

/// A joint that no protocol can produce: Alice's single message is the
/// product `XY`, which needs Bob's input. Used to confirm that the chain
/// checker reports violations.
pub fn corrupted_chain_fixture(rho: f64) -> Result<(JointTable, JointTable)> {
    let build = |src: &FiniteJoint| -> Result<JointTable> {
        let mut probs = Vec::with_capacity(8);
        for x in 0..2 {
            for y in 0..2 {
                let p = src.get(x, y);
                let same = usize::from(x == y);
                probs.extend((0..2).map(|u| if u == same { p } else { 0.0 }));
            }
        }
        JointTable::new(vec![2, 2, 2], probs)
    };
    let src = FiniteJoint::binary_symmetric(rho)?;
    Ok((build(&src)?, build(&src.independent_part())?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftReport {
    /// Correlation fed into the shift so that its output has `ρ1`.
    pub rho_in: f64,
    /// `D(P^{ρ1}_{ΠX′} ‖ P^{ρ0}_{ΠX′})`.
    pub d_pix: f64,
    pub d_piy: f64,
    /// The same divergences on the augmented space `(W0, Π, X)` and
    /// `(W0, Π, Y)`, which dominate the shifted ones.
    pub aug_d_pix: f64,
    pub aug_d_piy: f64,
    /// `I(Π; X, Y | W0)` under the input correlation.
    pub injected_given_w0: f64,
    pub message_bits: f64,
    /// `ρ_in² · message_bits`.
    pub bound: f64,
    /// Largest deviation between the shifted joint built through the
    /// common randomness and the joint built directly at `ρ1` or `ρ0`.
    pub construction_gap: f64,
    pub margin: f64,
    pub passed: bool,
}

/// Symbols of `W0 = (B, Z)` are `w = 2b + z`.
const W0: usize = 4;

fn shifted(w: usize, v: usize, bob: bool, sign: f64) -> usize {
    let (b, z) = (w / 2, w % 2);
    match (b, bob) {
        (0, _) => v,
        (_, false) => z,
        (_, true) => {
            if sign > 0.0 {
                z
            } else {
                1 - z
            }
        }
    }
}

/// `spec` lifted to inputs `(W0, X)` and `(W0, Y)`: each round reads the
/// shifted symbol.
fn lift(spec: &InteractiveSpec, sign: f64) -> Result<InteractiveSpec> {
    let mut history = 1usize;
    let mut rounds = Vec::with_capacity(spec.num_rounds());
    for (i, ch) in spec.rounds().iter().enumerate() {
        let bob = i % 2 == 1;
        let mut table = Vec::with_capacity(W0 * 2 * history);
        for w in 0..W0 {
            for v in 0..2 {
                let v2 = shifted(w, v, bob, sign);
                for h in 0..history {
                    table.push(ch.table[v2 * history + h].clone());
                }
            }
        }
        rounds.push(RoundChannel {
            alphabet: ch.alphabet,
            table,
        });
        history *= ch.alphabet;
    }
    InteractiveSpec::new(2 * W0, 2 * W0, rounds)
}

/// Joint of `(W0, X, Y, X′, Y′, Π)` with `(X, Y)` binary symmetric at `rho`.
fn augmented_joint(spec: &InteractiveSpec, params: &ShiftParams, rho: f64) -> Result<JointTable> {
    let alpha = params.alpha();
    let sign = params.sign();
    let src = FiniteJoint::binary_symmetric(rho)?;
    let mut probs = vec![0.0; (2 * W0) * (2 * W0)];
    for w in 0..W0 {
        let pw = 0.5 * if w / 2 == 1 { alpha } else { 1.0 - alpha };
        for x in 0..2 {
            for y in 0..2 {
                probs[(w * 2 + x) * (2 * W0) + w * 2 + y] = pw * src.get(x, y);
            }
        }
    }
    let lifted_src = FiniteJoint::new(2 * W0, 2 * W0, probs)?;
    let lifted = build_joint(&lift(spec, sign)?, &lifted_src)?;
    let hist: usize = spec.alphabets().iter().product();
    let mut dims = vec![W0, 2, 2, 2, 2];
    dims.extend(spec.alphabets());
    let mut out = vec![0.0; W0 * 16 * hist];
    for (flat, &p) in lifted.probs().iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let u = flat % hist;
        let xy = flat / hist;
        let (xt, yt) = (xy / (2 * W0), xy % (2 * W0));
        let (w, x, y) = (xt / 2, xt % 2, yt % 2);
        let xs = shifted(w, x, false, sign);
        let ys = shifted(w, y, true, sign);
        let idx = ((((w * 2 + x) * 2 + y) * 2 + xs) * 2 + ys) * hist + u;
        out[idx] += p;
    }
    JointTable::new(dims, out)
}

fn max_abs_diff(a: &JointTable, b: &JointTable) -> f64 {
    a.probs()
        .iter()
        .zip(b.probs())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Exact check of the correlation-shift reduction for a one-coordinate
/// binary source: the protocol runs on `(X′, Y′)` produced from `(X, Y)`
/// and the common randomness `W0 = (B, Z)`, and the divergence between the
/// `ρ1` and `ρ0` laws of `(Π, X′)` and `(Π, Y′)` must not exceed
/// `((ρ1 − ρ0)/(1 − |ρ0|))²` times the transcript length in bits.
pub fn verify_shift_reduction(rho0: f64, rho1: f64, spec: &InteractiveSpec) -> Result<ShiftReport> {
    if spec.nx() != 2 || spec.ny() != 2 {
        return Err(Error::AlphabetMismatch("shift reduction runs on a single binary pair".into()));
    }
    let params = ShiftParams::new(Family::Binary, rho0, rho1)?;
    let rho_in = params.input_rho();
    let on = augmented_joint(spec, &params, rho_in)?;
    let off = augmented_joint(spec, &params, 0.0)?;
    let r = spec.num_rounds();
    let pi: Vec<usize> = (5..5 + r).collect();
    let axes = |lead: &[usize]| -> Vec<usize> { lead.iter().copied().chain(pi.iter().copied()).collect() };

    let direct1 = build_joint(spec, &FiniteJoint::binary_symmetric(rho1)?)?;
    let direct0 = build_joint(spec, &FiniteJoint::binary_symmetric(rho0)?)?;
    let construction_gap =
        max_abs_diff(&on.marginal(&axes(&[3, 4])), &direct1).max(max_abs_diff(&off.marginal(&axes(&[3, 4])), &direct0));

    let direct_pi: Vec<usize> = (2..2 + r).collect();
    let dax = |lead: usize| -> Vec<usize> { std::iter::once(lead).chain(direct_pi.iter().copied()).collect() };
    let d_pix = kl_marginal(&direct1, &direct0, &dax(0))?;
    let d_piy = kl_marginal(&direct1, &direct0, &dax(1))?;
    let aug_d_pix = kl_marginal(&on, &off, &axes(&[0, 1]))?;
    let aug_d_piy = kl_marginal(&on, &off, &axes(&[0, 2]))?;
    let injected_given_w0 = if r == 0 { 0.0 } else { on.cond_mi(&pi, &[1, 2], &[0]) };
    let message_bits = spec.message_bits();
    let bound = rho_in * rho_in * message_bits;
    let lhs = d_pix.max(d_piy);
    let margin = [
        bound - lhs,
        aug_d_pix - d_pix,
        aug_d_piy - d_piy,
        rho_in * rho_in * injected_given_w0 - aug_d_pix.max(aug_d_piy),
    ]
    .into_iter()
    .fold(f64::INFINITY, f64::min);
    Ok(ShiftReport {
        rho_in,
        d_pix,
        d_piy,
        aug_d_pix,
        aug_d_piy,
        injected_given_w0,
        message_bits,
        bound,
        construction_gap,
        margin,
        passed: margin >= -CHAIN_TOL && construction_gap <= 1e-12,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapHammingReport {
    pub n: usize,
    pub c: f64,
    pub rho0: f64,
    /// `I(U;Π)` for `U ~ Ber(1/2)` selecting correlation `±ρ0`.
    pub i_u_pi: f64,
    /// `½ D(P^{+ρ0}_{XΠ} ‖ P⁰_{XΠ}) + ½ D(P^{−ρ0}_{XΠ} ‖ P⁰_{XΠ})`.
    pub mixture_kl_bound: f64,
    /// `ρ0² · ½ (I₊(Π;X,Y) + I₋(Π;X,Y))`.
    pub conditional_bound: f64,
    /// `ρ0² · I(Π;X,Y)` under the mixture.
    pub rho_sq_injected: f64,
    pub implied_k_lower: f64,
    pub margin: f64,
    pub passed: bool,
}

/// Alice announces the sign of `Σ X_i`, breaking ties toward `+1`.
pub fn majority_spec(n: usize) -> Result<InteractiveSpec> {
    if n == 0 || n > 20 {
        return Err(Error::ParameterDomain(format!("n must lie in 1..=20, got {n}")));
    }
    let size = 1usize << n;
    InteractiveSpec::one_way_deterministic(size, size, 2, |x| {
        let plus = x.count_ones() as usize;
        usize::from(2 * plus >= n)
    })
}

fn mixture(a: &JointTable, b: &JointTable) -> Result<JointTable> {
    let probs = a.probs().iter().zip(b.probs()).map(|(x, y)| 0.5 * (x + y)).collect();
    JointTable::new(a.dims().to_vec(), probs)
}

/// Exact mixture argument on `n` binary pairs with correlation `±c/√n`.
pub fn gap_hamming_demo(n: usize, spec: &InteractiveSpec, c: f64) -> Result<GapHammingReport> {
    if n == 0 || n > 20 {
        return Err(Error::ParameterDomain(format!("n must lie in 1..=20, got {n}")));
    }
    let rho0 = c / (n as f64).sqrt();
    if !(rho0.is_finite() && rho0.abs() <= 1.0) {
        return Err(Error::ParameterDomain(format!("c/sqrt(n) = {rho0} is not a correlation")));
    }
    let size = 1usize << n;
    if spec.nx() != size || spec.ny() != size {
        return Err(Error::AlphabetMismatch(format!("spec must read {size}-ary inputs")));
    }
    let plus = build_joint(spec, &binary_product_source(rho0, n)?)?;
    let minus = build_joint(spec, &binary_product_source(-rho0, n)?)?;
    let zero = build_joint(spec, &binary_product_source(0.0, n)?)?;
    let mix = mixture(&plus, &minus)?;
    let r = spec.num_rounds();
    let pi: Vec<usize> = (2..2 + r).collect();
    let xpi: Vec<usize> = std::iter::once(0).chain(pi.iter().copied()).collect();

    let (i_u_pi, mixture_kl_bound, i_plus, i_minus, i_mix) = if r == 0 {
        (0.0, 0.0, 0.0, 0.0, 0.0)
    } else {
        let m = mix.marginal(&pi);
        let i_u_pi = 0.5 * (plus.marginal(&pi).kl_to(&m)? + minus.marginal(&pi).kl_to(&m)?);
        let kl_bound = 0.5 * (kl_marginal(&plus, &zero, &xpi)? + kl_marginal(&minus, &zero, &xpi)?);
        (
            i_u_pi,
            kl_bound,
            plus.mi(&pi, &[0, 1]),
            minus.mi(&pi, &[0, 1]),
            mix.mi(&pi, &[0, 1]),
        )
    };
    let r2 = rho0 * rho0;
    let conditional_bound = r2 * 0.5 * (i_plus + i_minus);
    let rho_sq_injected = r2 * i_mix;
    let margin = [
        mixture_kl_bound - i_u_pi,
        conditional_bound - mixture_kl_bound,
        rho_sq_injected - conditional_bound,
    ]
    .into_iter()
    .fold(f64::INFINITY, f64::min);
    let implied_k_lower = if r2 > 0.0 { i_u_pi / r2 } else { 0.0 };
    Ok(GapHammingReport {
        n,
        c,
        rho0,
        i_u_pi,
        mixture_kl_bound,
        conditional_bound,
        rho_sq_injected,
        implied_k_lower,
        margin,
        passed: margin >= -CHAIN_TOL,
    })
}
