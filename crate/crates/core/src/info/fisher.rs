//! Fisher information from divergence curvature and the Bayesian
//! Cramér–Rao machinery built on the raised-cosine prior.

use rand::Rng;
use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::sync::Arc;

use super::measures::{kl_unchecked, validate_pmf, PMF_TOL};
use crate::error::{domain, Error, Result};
use crate::numeric::{check_finite, integrate};

type Evaluator = dyn Fn(f64) -> Vec<f64> + Send + Sync;

/// A one-parameter family of pmfs on a fixed finite alphabet.
#[derive(Clone)]
pub struct ParamFamily {
    eval: Arc<Evaluator>,
    lo: f64,
    hi: f64,
}

impl fmt::Debug for ParamFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParamFamily").field("lo", &self.lo).field("hi", &self.hi).finish()
    }
}

impl ParamFamily {
    pub fn new<F>(lo: f64, hi: f64, eval: F) -> Result<Self>
    where
        F: Fn(f64) -> Vec<f64> + Send + Sync + 'static,
    {
        check_finite("lo", lo)?;
        check_finite("hi", hi)?;
        if lo >= hi {
            return Err(domain(format!("empty parameter domain [{lo}, {hi}]")));
        }
        Ok(Self {
            eval: Arc::new(eval),
            lo,
            hi,
        })
    }

    /// The pair `(X, Y)` of a binary symmetric source as a 4-point family
    /// in ρ: `P(x, y) = (1 + ρxy)/4`, ordered `(−−, −+, +−, ++)`.
    pub fn binary_pair() -> Self {
        Self::new(-1.0, 1.0, |r| {
            let same = (1.0 + r) / 4.0;
            let diff = (1.0 - r) / 4.0;
            vec![same, diff, diff, same]
        })
        .expect("valid domain")
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// The pmf at θ, validated.
    pub fn pmf(&self, theta: f64) -> Result<Vec<f64>> {
        if !(theta >= self.lo && theta <= self.hi) {
            return Err(domain(format!(
                "theta = {theta} outside [{}, {}]",
                self.lo, self.hi
            )));
        }
        let p = (self.eval)(theta);
        validate_pmf(&p, PMF_TOL)?;
        Ok(p)
    }

    /// `g(θ, ε) = D(P_θ ‖ P_{θ+ε})` in bits.
    pub fn divergence_step(&self, theta: f64, eps: f64) -> Result<f64> {
        let p = self.pmf(theta)?;
        let q = self.pmf(theta + eps)?;
        if p.len() != q.len() {
            return Err(Error::AlphabetMismatch("family changes alphabet size".into()));
        }
        Ok(kl_unchecked(&p, &q))
    }
}

/// One-sided curvature estimate `2 ln2 · g(θ, ε) / ε²`; `ε` may be negative.
pub fn fisher_one_sided(fam: &ParamFamily, theta: f64, eps: f64) -> Result<f64> {
    if eps == 0.0 || !eps.is_finite() {
        return Err(domain("eps must be finite and nonzero"));
    }
    Ok(2.0 * LN_2 * fam.divergence_step(theta, eps)? / (eps * eps))
}

/// Two-sided estimate `2 ln2 · [g(θ,ε) + g(θ,−ε)] / (2ε²)`, error `O(ε²)`.
pub fn fisher_fd_central(fam: &ParamFamily, theta: f64, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(domain(format!("eps must be positive, got {eps}")));
    }
    let g = fam.divergence_step(theta, eps)? + fam.divergence_step(theta, -eps)?;
    Ok(LN_2 * g / (eps * eps))
}

/// Fisher information at θ from KL curvature: the two-sided estimate at
/// `ε` and `ε/2` combined by one Richardson step, which cancels the
/// `O(ε²)` term.
pub fn fisher_fd(fam: &ParamFamily, theta: f64, eps: f64) -> Result<f64> {
    let coarse = fisher_fd_central(fam, theta, eps)?;
    let fine = fisher_fd_central(fam, theta, 0.5 * eps)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// Closed-form Fisher information of the binary pair family, `1/(1−ρ²)`.
pub fn binary_pair_fisher(rho: f64) -> f64 {
    1.0 / (1.0 - rho * rho)
}

/// Upper bound `2k ln2 / (1−|ρ|)²` on the Fisher information carried by a
/// `k`-bit transcript together with either party's binary samples.
pub fn interactive_fisher_bound(k: f64, rho: f64) -> f64 {
    2.0 * k * LN_2 / (1.0 - rho.abs()).powi(2)
}

/// Raised-cosine prior `λ(θ) = (1/h) cos²(π(θ−c)/(2h))` on `[c−h, c+h]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosinePrior {
    center: f64,
    half_width: f64,
}

impl CosinePrior {
    pub fn new(center: f64, half_width: f64) -> Result<Self> {
        check_finite("center", center)?;
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(domain(format!("half_width must be positive, got {half_width}")));
        }
        Ok(Self { center, half_width })
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - self.half_width, self.center + self.half_width)
    }

    pub fn density(&self, theta: f64) -> f64 {
        let v = (theta - self.center) / self.half_width;
        if v.abs() > 1.0 {
            return 0.0;
        }
        (0.5 * PI * v).cos().powi(2) / self.half_width
    }

    pub fn cdf(&self, theta: f64) -> f64 {
        let v = ((theta - self.center) / self.half_width).clamp(-1.0, 1.0);
        0.5 * (1.0 + v + (PI * v).sin() / PI)
    }

    /// Inverse CDF by safeguarded Newton iteration.
    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let (mut lo, mut hi) = (-1.0f64, 1.0f64);
        let mut v = 2.0 * u - 1.0;
        for _ in 0..100 {
            let f = 0.5 * (1.0 + v + (PI * v).sin() / PI) - u;
            if f.abs() < 1e-15 {
                break;
            }
            if f > 0.0 {
                hi = v;
            } else {
                lo = v;
            }
            let d = (0.5 * PI * v).cos().powi(2);
            let step = if d > 1e-300 { v - f / d } else { f64::NAN };
            v = if step > lo && step < hi { step } else { 0.5 * (lo + hi) };
            if hi - lo < 1e-16 {
                break;
            }
        }
        self.center + self.half_width * v
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random::<f64>())
    }

    /// `I^λ = ∫ λ'²/λ = (π/h)²`.
    pub fn fisher_info(&self) -> f64 {
        (PI / self.half_width).powi(2)
    }

    /// `∫ λ'²/λ` by quadrature, as a check on [`Self::fisher_info`].
    /// On the support `λ'²/λ = (π/h)² sin²(π(θ−c)/(2h)) / h`.
    pub fn fisher_info_quadrature(&self) -> f64 {
        let h = self.half_width;
        let (a, b) = self.support();
        let f = |t: f64| {
            let arg = 0.5 * PI * (t - self.center) / h;
            let lam = arg.cos().powi(2) / h;
            let dlam = -(PI / (h * h)) * arg.cos() * arg.sin();
            if lam > 0.0 {
                dlam * dlam / lam
            } else {
                0.0
            }
        };
        integrate(f, a, b, 1e-12 * self.fisher_info(), 400).0
    }

    /// `E_λ f(θ)` by quadrature.
    pub fn expect<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let (a, b) = self.support();
        integrate(|t| self.density(t) * f(t), a, b, 1e-12, 400).0
    }
}

/// Bayesian Cramér–Rao lower bound `1 / (I^λ + E_λ I_F)`.
pub fn bayes_cr_bound(i_lambda: f64, avg_fisher: f64) -> Result<f64> {
    check_finite("i_lambda", i_lambda)?;
    check_finite("avg_fisher", avg_fisher)?;
    if i_lambda < 0.0 || avg_fisher < 0.0 {
        return Err(domain("information terms must be nonnegative"));
    }
    if i_lambda == 0.0 && avg_fisher == 0.0 {
        return Err(Error::Undefined("bound undefined with zero total information".into()));
    }
    Ok(1.0 / (i_lambda + avg_fisher))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn binary_pair_examples() {
        let fam = ParamFamily::binary_pair();
        assert_abs_diff_eq!(fisher_fd(&fam, 0.0, 1e-3).unwrap(), 1.0, epsilon = 1e-5);
        assert_abs_diff_eq!(fisher_fd(&fam, 0.5, 1e-3).unwrap(), 4.0 / 3.0, epsilon = 1e-4);
        assert_abs_diff_eq!(fisher_fd(&fam, 0.9, 1e-3).unwrap(), binary_pair_fisher(0.9), epsilon = 1e-4);
    }

    #[test]
    fn central_error_is_second_order() {
        let fam = ParamFamily::binary_pair();
        let exact = binary_pair_fisher(0.9);
        let e1 = fisher_fd_central(&fam, 0.9, 1e-2).unwrap() - exact;
        let e2 = fisher_fd_central(&fam, 0.9, 5e-3).unwrap() - exact;
        let ratio = e1 / e2;
        assert!((ratio - 4.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn one_sided_estimates_agree_to_first_order() {
        let fam = ParamFamily::binary_pair();
        for &eps in &[1e-2, 5e-3, 2.5e-3] {
            let plus = fisher_one_sided(&fam, 0.5, eps).unwrap();
            let minus = fisher_one_sided(&fam, 0.5, -eps).unwrap();
            assert!((plus - minus).abs() < 20.0 * eps);
        }
    }

    #[test]
    fn constant_family_has_no_information() {
        let fam = ParamFamily::new(0.0, 1.0, |_| vec![0.2, 0.8]).unwrap();
        assert_eq!(fisher_fd(&fam, 0.5, 1e-3).unwrap(), 0.0);
    }

    #[test]
    fn out_of_domain_step_rejected() {
        let fam = ParamFamily::binary_pair();
        assert!(matches!(fisher_fd(&fam, 0.9995, 1e-3), Err(Error::ParameterDomain(_))));
        assert!(fisher_fd(&fam, 0.0, 0.0).is_err());
    }

    #[test]
    fn cosine_prior_examples() {
        let p = CosinePrior::new(0.3, 0.1).unwrap();
        let (a, b) = p.support();
        let mass = integrate(|t| p.density(t), a, b, 1e-13, 200).0;
        assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(p.fisher_info(), 986.960_440_108_935_8, epsilon = 1e-9);
        assert_abs_diff_eq!(p.fisher_info_quadrature(), p.fisher_info(), epsilon = 1e-7);
        assert!(p.density(a).abs() < 1e-12);
        assert!(p.density(b).abs() < 1e-12);
        assert!(CosinePrior::new(0.0, 0.0).is_err());
    }

    #[test]
    fn cosine_prior_quantile_inverts_cdf() {
        let p = CosinePrior::new(-0.2, 0.5).unwrap();
        for i in 0..=20 {
            let u = i as f64 / 20.0;
            assert_abs_diff_eq!(p.cdf(p.quantile(u)), u, epsilon = 1e-12);
        }
    }

    #[test]
    fn bayes_cr_examples() {
        assert_eq!(bayes_cr_bound(0.0, 1.0).unwrap(), 1.0);
        let v = bayes_cr_bound(986.96, interactive_fisher_bound(64.0, 0.5)).unwrap();
        assert_abs_diff_eq!(interactive_fisher_bound(64.0, 0.5), 354.891, epsilon = 1e-3);
        assert_abs_diff_eq!(v, 1.0 / (986.96 + 354.891), epsilon = 1e-8);
        assert_abs_diff_eq!(v, 7.45e-4, epsilon = 1e-6);
        assert_eq!(bayes_cr_bound(4.0, 0.0).unwrap(), 0.25);
        assert!(matches!(bayes_cr_bound(0.0, 0.0), Err(Error::Undefined(_))));
    }

    proptest! {
        #[test]
        fn richardson_halving_consistent(rho in -0.8f64..0.8) {
            let fam = ParamFamily::binary_pair();
            let a = fisher_fd_central(&fam, rho, 1e-2).unwrap();
            let b = fisher_fd_central(&fam, rho, 5e-3).unwrap();
            // Successive central estimates differ by O(ε²).
            prop_assert!((a - b).abs() < 5e-4 * binary_pair_fisher(rho).powi(3));
        }

        #[test]
        fn prior_samples_stay_in_support(seed in any::<u64>()) {
            let p = CosinePrior::new(0.1, 0.2).unwrap();
            let mut r = crate::rng::stream(seed, "prior");
            let t = p.sample(&mut r);
            prop_assert!(t >= -0.1 - 1e-15 && t <= 0.3 + 1e-15);
        }
    }
}
