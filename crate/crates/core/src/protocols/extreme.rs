//! Moments of the maximum of `N` iid standard normals.

use rand::Rng;
use rand_distr::Open01;
use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;

use crate::error::{domain, Result};
use crate::numeric::{integrate, normal_isf, normal_log_cdf};

const QUAD_TOL: f64 = 1e-12;
const QUAD_SEGMENTS: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxMoments {
    pub mean: f64,
    pub var: f64,
}

/// `ln` of the density `N φ(x) Φ(x)^{N−1}` of the maximum.
fn log_density(x: f64, ln_n: f64) -> f64 {
    let n_minus_one = ln_n.exp_m1();
    ln_n - 0.5 * x * x - 0.5 * (2.0 * std::f64::consts::PI).ln() + n_minus_one * normal_log_cdf(x)
}

/// Mean and variance of the maximum of `N = e^{ln_n}` standard normals by
/// adaptive quadrature. Taking `ln N` allows `N` far beyond `u64`.
pub fn max_normal_moments_ln(ln_n: f64) -> Result<MaxMoments> {
    if !(ln_n >= 0.0 && ln_n.is_finite()) {
        return Err(domain(format!("N must be at least 1 (ln N = {ln_n})")));
    }
    if ln_n == 0.0 {
        return Ok(MaxMoments { mean: 0.0, var: 1.0 });
    }
    let c = (2.0 * ln_n).sqrt();
    let (a, b) = (c - 14.0, c + 14.0);
    let dens = |x: f64| log_density(x, ln_n).exp();
    let (mass_lo, _) = integrate(dens, a, c, QUAD_TOL, QUAD_SEGMENTS);
    let (mass_hi, _) = integrate(dens, c, b, QUAD_TOL, QUAD_SEGMENTS);
    let mass = mass_lo + mass_hi;
    let first = |x: f64| x * dens(x);
    let mean = (integrate(first, a, c, QUAD_TOL, QUAD_SEGMENTS).0 + integrate(first, c, b, QUAD_TOL, QUAD_SEGMENTS).0)
        / mass;
    let second = |x: f64| (x - mean).powi(2) * dens(x);
    let var = (integrate(second, a, c, QUAD_TOL, QUAD_SEGMENTS).0
        + integrate(second, c, b, QUAD_TOL, QUAD_SEGMENTS).0)
        / mass;
    Ok(MaxMoments { mean, var })
}

pub fn max_normal_moments(n: u64) -> Result<MaxMoments> {
    if n == 0 {
        return Err(domain("N must be at least 1"));
    }
    max_normal_moments_ln((n as f64).ln())
}

/// Moments for `N = 2^k`.
pub fn max_normal_moments_pow2(k: u32) -> Result<MaxMoments> {
    max_normal_moments_ln(k as f64 * LN_2)
}

/// `E[max of N iid N(0,1)]`.
pub fn expected_max_normal(n: u64) -> Result<f64> {
    Ok(max_normal_moments(n)?.mean)
}

/// `Var[max of N iid N(0,1)]`.
pub fn var_max_normal(n: u64) -> Result<f64> {
    Ok(max_normal_moments(n)?.var)
}

/// Leading-order growth `√(2 ln N)` of the expected maximum.
pub fn asymptotic_max_normal(n: f64) -> f64 {
    (2.0 * n.ln()).sqrt()
}

/// Draws the maximum of `N = e^{ln_n}` standard normals by inverting
/// `Φ(x)^N`: `X = Φ⁻¹(U^{1/N})`.
pub fn sample_max_normal<R: Rng + ?Sized>(ln_n: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.sample(Open01);
    let n = ln_n.exp();
    normal_isf(-(u.ln() / n).exp_m1())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn closed_forms() {
        assert_eq!(expected_max_normal(1).unwrap(), 0.0);
        assert_eq!(var_max_normal(1).unwrap(), 1.0);
        let pi = std::f64::consts::PI;
        assert_abs_diff_eq!(expected_max_normal(2).unwrap(), 1.0 / pi.sqrt(), epsilon = 1e-10);
        assert_abs_diff_eq!(var_max_normal(2).unwrap(), 1.0 - 1.0 / pi, epsilon = 1e-10);
        // E max of 3 = 3 / (2 √π).
        assert_abs_diff_eq!(expected_max_normal(3).unwrap(), 1.5 / pi.sqrt(), epsilon = 1e-10);
        assert!(expected_max_normal(0).is_err());
    }

    #[test]
    fn matches_reference_values() {
        // Independent high-precision quadrature values.
        let cases = [
            (10, 3.248_239_6, 0.123_033),
            (14, 3.971_350_6, 0.087_779_9),
            (18, 4.590_278_4, 0.068_160_8),
            (26, 5.638_834_9, 0.047_038_7),
        ];
        for (k, mean, var) in cases {
            let m = max_normal_moments_pow2(k).unwrap();
            assert_abs_diff_eq!(m.mean, mean, epsilon = 1e-6);
            assert_abs_diff_eq!(m.var, var, epsilon = 1e-6);
        }
        let a = max_normal_moments(1 << 10).unwrap();
        let b = max_normal_moments_pow2(10).unwrap();
        assert_abs_diff_eq!(a.mean, b.mean, epsilon = 1e-12);
    }

    #[test]
    fn approaches_asymptote() {
        let mut prev = 0.0;
        for k in [4u32, 8, 12, 16, 20, 64, 256] {
            let m = max_normal_moments_pow2(k).unwrap().mean;
            let r = m / asymptotic_max_normal(2f64.powi(k as i32));
            assert!(r > prev && r < 1.0, "k={k} ratio {r}");
            prev = r;
        }
    }

    #[test]
    fn sampler_mean() {
        let mut rng = crate::rng::stream(11, "max");
        let n = 200_000;
        let ln_n = 10.0 * LN_2;
        let xs: Vec<f64> = (0..n).map(|_| sample_max_normal(ln_n, &mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let m = max_normal_moments_pow2(10).unwrap();
        assert!((mean - m.mean).abs() < 4.0 * (m.var / n as f64).sqrt());
    }
}
