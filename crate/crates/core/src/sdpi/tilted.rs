//! Single-letter contraction checks: SDPI under product tilts of a binary
//! symmetric pair, and the Hellinger-affinity bound for binary-input
//! channels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::info::{validate_pmf, FiniteJoint, JointTable, PMF_TOL};

/// Tolerance of the single-letter inequality checks.
pub const TILT_TOL: f64 = 1e-10;

fn check_weights(w: &[f64], name: &str) -> Result<()> {
    if w.len() != 2 {
        return Err(Error::Shape(format!("{name} must have 2 weights, has {}", w.len())));
    }
    if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::ParameterDomain(format!("{name} weights must be finite and nonnegative")));
    }
    Ok(())
}

pub(crate) fn check_channel(ch: &[Vec<f64>], inputs: usize, name: &str) -> Result<usize> {
    if ch.len() != inputs {
        return Err(Error::AlphabetMismatch(format!(
            "{name} has {} rows, input alphabet has {inputs}",
            ch.len()
        )));
    }
    let width = ch.first().map_or(0, Vec::len);
    if width == 0 || ch.iter().any(|r| r.len() != width) {
        return Err(Error::Shape(format!("{name} rows must be nonempty and equal width")));
    }
    for row in ch {
        validate_pmf(row, PMF_TOL)?;
    }
    Ok(width)
}

/// `P(x, y) ∝ f(x) g(y) Q(x, y)` with `Q` binary symmetric of correlation ρ.
pub fn tilted_source(rho: f64, f: &[f64], g: &[f64]) -> Result<FiniteJoint> {
    check_weights(f, "f")?;
    check_weights(g, "g")?;
    let q = FiniteJoint::binary_symmetric(rho)?;
    let mut p = Vec::with_capacity(4);
    for x in 0..2 {
        for y in 0..2 {
            p.push(f[x] * g[y] * q.get(x, y));
        }
    }
    let z: f64 = p.iter().sum();
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::Undefined("tilt has zero total mass".into()));
    }
    FiniteJoint::new(2, 2, p.into_iter().map(|v| v / z).collect())
}

/// Joint of `(X, Y, W)` where `W` is drawn through `channel` from `X`
/// (`from_x`) or from `Y`.
pub(crate) fn attach(source: &FiniteJoint, channel: &[Vec<f64>], from_x: bool) -> Result<JointTable> {
    let inputs = if from_x { source.nx() } else { source.ny() };
    let w = check_channel(channel, inputs, "channel")?;
    let mut probs = Vec::with_capacity(source.probs().len() * w);
    for x in 0..source.nx() {
        for y in 0..source.ny() {
            let p = source.get(x, y);
            let row = &channel[if from_x { x } else { y }];
            probs.extend(row.iter().map(|c| p * c));
        }
    }
    JointTable::new(vec![source.nx(), source.ny(), w], probs)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TiltedReport {
    pub i_uy: f64,
    pub i_ux: f64,
    pub i_xv: f64,
    pub i_yv: f64,
    /// `ρ² I(U;X) − I(U;Y)`.
    pub margin_u: f64,
    /// `ρ² I(Y;V) − I(X;V)`.
    pub margin_v: f64,
    pub passed: bool,
}

impl TiltedReport {
    pub fn margin(&self) -> f64 {
        self.margin_u.min(self.margin_v)
    }
}

/// Checks both `I(U;Y) ≤ ρ² I(U;X)` for `U − X − Y` and
/// `I(X;V) ≤ ρ² I(Y;V)` for `X − Y − V` under the tilted pair.
pub fn verify_tilted_sdpi(
    rho: f64,
    f: &[f64],
    g: &[f64],
    channel_u: &[Vec<f64>],
    channel_v: &[Vec<f64>],
) -> Result<TiltedReport> {
    let src = tilted_source(rho, f, g)?;
    let ju = attach(&src, channel_u, true)?;
    let jv = attach(&src, channel_v, false)?;
    let i_uy = ju.mi(&[2], &[1]);
    let i_ux = ju.mi(&[2], &[0]);
    let i_xv = jv.mi(&[0], &[2]);
    let i_yv = jv.mi(&[1], &[2]);
    let r2 = rho * rho;
    let margin_u = r2 * i_ux - i_uy;
    let margin_v = r2 * i_yv - i_xv;
    Ok(TiltedReport {
        i_uy,
        i_ux,
        i_xv,
        i_yv,
        margin_u,
        margin_v,
        passed: margin_u >= -TILT_TOL && margin_v >= -TILT_TOL,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractionReport {
    pub i_ub: f64,
    pub i_ua: f64,
    /// `1 − (Σ_v √(p(v) q(v)))²`.
    pub factor: f64,
    /// `factor · I(U;A) − I(U;B)`.
    pub margin: f64,
    pub passed: bool,
}

/// Checks `I(U;B) ≤ I(U;A)(1 − (Σ_v √(p(v)q(v)))²)` for `U − A − B` with
/// binary `A ~ prior_a`, `B | A=0 ~ p`, `B | A=1 ~ q` and `U` drawn from
/// `A` through `channel`.
pub fn binary_input_contraction(
    p: &[f64],
    q: &[f64],
    channel: &[Vec<f64>],
    prior_a: &[f64],
) -> Result<ContractionReport> {
    validate_pmf(p, PMF_TOL)?;
    validate_pmf(q, PMF_TOL)?;
    validate_pmf(prior_a, PMF_TOL)?;
    if p.len() != q.len() {
        return Err(Error::AlphabetMismatch(format!("p has {} symbols, q has {}", p.len(), q.len())));
    }
    if prior_a.len() != 2 {
        return Err(Error::AlphabetMismatch("A must be binary".into()));
    }
    let nu = check_channel(channel, 2, "channel")?;
    let nb = p.len();
    let mut probs = Vec::with_capacity(nu * 2 * nb);
    for u in 0..nu {
        for a in 0..2 {
            let b_law = if a == 0 { p } else { q };
            let w = prior_a[a] * channel[a][u];
            probs.extend(b_law.iter().map(|pb| w * pb));
        }
    }
    let j = JointTable::new(vec![nu, 2, nb], probs)?;
    let i_ub = j.mi(&[0], &[2]);
    let i_ua = j.mi(&[0], &[1]);
    let affinity: f64 = p.iter().zip(q).map(|(a, b)| (a * b).sqrt()).sum();
    let factor = (1.0 - affinity * affinity).max(0.0);
    let margin = factor * i_ua - i_ub;
    Ok(ContractionReport {
        i_ub,
        i_ua,
        factor,
        margin,
        passed: margin >= -TILT_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn identity() -> Vec<Vec<f64>> {
        vec![vec![1.0, 0.0], vec![0.0, 1.0]]
    }

    #[test]
    fn untilted_copy_matches_direct_mi() {
        let r = verify_tilted_sdpi(0.5, &[1.0, 1.0], &[1.0, 1.0], &identity(), &identity()).unwrap();
        assert_abs_diff_eq!(r.i_ux, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.i_uy, 0.188722, epsilon = 1e-6);
        assert!(r.passed);
        assert_abs_diff_eq!(r.i_xv, r.i_uy, epsilon = 1e-12);
    }

    #[test]
    fn independence_gives_zero() {
        let ch = vec![vec![0.2, 0.8], vec![0.9, 0.1]];
        let r = verify_tilted_sdpi(0.0, &[0.3, 2.0], &[5.0, 0.1], &ch, &ch).unwrap();
        assert!(r.i_uy.abs() < 1e-15 && r.i_xv.abs() < 1e-15);
        assert!(r.passed);
    }

    #[test]
    fn degenerate_tilt_is_rejected() {
        assert!(matches!(
            tilted_source(0.5, &[0.0, 0.0], &[1.0, 1.0]),
            Err(Error::Undefined(_))
        ));
        assert!(tilted_source(0.5, &[-1.0, 1.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn equal_laws_force_zero() {
        let p = [0.2, 0.3, 0.5];
        let ch = vec![vec![0.7, 0.3], vec![0.1, 0.9]];
        let r = binary_input_contraction(&p, &p, &ch, &[0.5, 0.5]).unwrap();
        assert!(r.factor.abs() < 1e-15);
        assert!(r.i_ub.abs() < 1e-15);
        assert!(r.passed);
    }

    #[test]
    fn disjoint_supports_reduce_to_dpi() {
        let r = binary_input_contraction(&[0.5, 0.5, 0.0], &[0.0, 0.0, 1.0], &identity(), &[0.3, 0.7]).unwrap();
        assert_abs_diff_eq!(r.factor, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.i_ub, r.i_ua, epsilon = 1e-12);
        assert!(r.passed);
    }

    #[test]
    fn contraction_alphabet_mismatch() {
        assert!(matches!(
            binary_input_contraction(&[0.5, 0.5], &[1.0], &identity(), &[0.5, 0.5]),
            Err(Error::AlphabetMismatch(_))
        ));
    }

    fn pmf(len: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..1.0, len).prop_filter_map("zero mass", |v| {
            let s: f64 = v.iter().sum();
            (s > 1e-3).then(|| v.iter().map(|x| x / s).collect())
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]
        #[test]
        fn tilted_never_violates(rho in -0.99f64..0.99, f in pmf(2), g in pmf(2),
                                 cu in prop::collection::vec(pmf(3), 2),
                                 cv in prop::collection::vec(pmf(3), 2)) {
            prop_assume!(f.iter().all(|v| *v > 1e-6) && g.iter().all(|v| *v > 1e-6));
            let r = verify_tilted_sdpi(rho, &f, &g, &cu, &cv).unwrap();
            prop_assert!(r.passed, "{r:?}");
        }

        #[test]
        fn contraction_never_violates(p in pmf(4), q in pmf(4), prior in pmf(2),
                                      ch in prop::collection::vec(pmf(3), 2)) {
            let r = binary_input_contraction(&p, &q, &ch, &prior).unwrap();
            prop_assert!(r.passed, "{r:?}");
        }
    }
}
