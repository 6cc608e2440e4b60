//! Acceptance suite: one test per criterion, each printing a single
//! `criterion N: PASS|FAIL ...` line before asserting.
//!
//! Run with `cargo test --release --test acceptance -- --nocapture` to see
//! the lines; the Monte Carlo sizes are the full ones.

use std::f64::consts::{LN_2, PI};
use std::process::Command;

use corrsim::info::{bayes_cr_bound, binary_pair_fisher, fisher_fd, CosinePrior, ParamFamily};
use corrsim::model::{gen_pairs, shift_correlation, CorrelationModel, Family, PairBatch, ShiftParams};
use corrsim::protocols::{
    estimate_risk, expected_max_normal, sample_max_normal, LocalParams, MaxScheme, RiskReport, Sampling,
    SchemeConfig,
};
use corrsim::rng::substream;
use corrsim::sdpi::{run_suite, Suite, SuiteSummary};

const TRIALS: u64 = 100_000;

fn verdict(n: u32, pass: bool, detail: &str) {
    println!("criterion {n}: {} {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {n} failed: {detail}");
}

fn risk(config: &SchemeConfig, k: u64, rho: f64, seed: u64) -> RiskReport {
    estimate_risk(config, k, rho, TRIALS, seed, Sampling::Auto).unwrap()
}

#[test]
fn criterion_01_naive_risk() {
    let mut worst = 0.0f64;
    for k in [64, 128] {
        for rho in [0.0, 0.5, 0.9] {
            let r = risk(&SchemeConfig::Naive, k, rho, 100 + k);
            let target = (1.0 - rho * rho) / k as f64;
            worst = worst.max((r.mse / target - 1.0).abs());
        }
    }
    verdict(1, worst <= 0.05, &format!("worst relative MSE error {worst:.4} (limit 0.05)"));
}

#[test]
fn criterion_02_max_scheme_unbiased() {
    let mut worst = 0.0f64;
    for (i, rho) in [-0.9, -0.5, 0.0, 0.5, 0.9].into_iter().enumerate() {
        let r = risk(&SchemeConfig::Max, 14, rho, 200 + i as u64);
        worst = worst.max((r.raw.mean - rho).abs() / r.raw.se_mean);
    }
    verdict(2, worst <= 3.0, &format!("worst |mean - rho| / SE = {worst:.3} (limit 3)"));
}

#[test]
fn criterion_03_max_scheme_variance() {
    let mut worst_z = 0.0f64;
    let mut monotone = true;
    let mut k18 = f64::NAN;
    for (j, rho) in [0.0, 0.5].into_iter().enumerate() {
        let mut prev = f64::INFINITY;
        for k in [10u64, 14, 18] {
            let oracle = MaxScheme::new(k).unwrap().exact_mse(rho);
            let r = risk(&SchemeConfig::Max, k, rho, 300 + 10 * j as u64 + k);
            worst_z = worst_z.max((r.raw.mse - oracle).abs() / r.raw.se_mse);
            let kmse = k as f64 * r.raw.mse;
            monotone &= kmse <= prev;
            prev = kmse;
            if k == 18 && rho == 0.0 {
                k18 = kmse;
            }
        }
    }
    let unit = 1.0 / (2.0 * LN_2);
    let bracket = (1.0..=1.35).contains(&(k18 / unit));
    verdict(
        3,
        worst_z <= 3.0 && monotone && bracket,
        &format!(
            "worst |MSE - oracle| / SE = {worst_z:.3}, k*MSE nonincreasing = {monotone}, k=18 k*MSE = {:.4} x 1/(2 ln2)",
            k18 / unit
        ),
    );
}

#[test]
fn criterion_04_local_scheme_gain() {
    let (k, rho) = (18, 0.6);
    let local = SchemeConfig::Local {
        rho_nominal: Some(rho),
        params: LocalParams::default(),
    };
    let l = risk(&local, k, rho, 401);
    let m = risk(&SchemeConfig::Max, k, rho, 402);
    let ratio = l.mse / m.mse;
    verdict(
        4,
        ratio <= 0.8 && l.decode_failure_rate < 0.05,
        &format!(
            "local/max MSE = {ratio:.4} (limit 0.8), decode failure rate {:.4} (limit 0.05)",
            l.decode_failure_rate
        ),
    );
}

#[test]
fn criterion_05_block_trend() {
    let (k, rho) = (256, 0.5);
    let reports: Vec<RiskReport> = [0.5, 0.25, 0.1]
        .into_iter()
        .enumerate()
        .map(|(i, rho_tilde)| {
            let cfg = SchemeConfig::Block {
                rho_tilde,
                n_block: None,
                rho_nominal: Some(rho),
                params: Default::default(),
            };
            risk(&cfg, k, rho, 500 + i as u64)
        })
        .collect();
    let ok = reports.windows(2).all(|w| {
        let (a, b) = (&w[0], &w[1]);
        b.mse <= a.mse || b.mse - b.ci95_halfwidth <= a.mse + a.ci95_halfwidth
    });
    let kmse: Vec<String> = reports.iter().map(|r| format!("{:.4}", k as f64 * r.mse)).collect();
    verdict(5, ok, &format!("k*MSE over rho_tilde 0.5, 0.25, 0.1 = [{}]", kmse.join(", ")));
}

fn suite(s: Suite, draws: u64, seed: u64) -> SuiteSummary {
    run_suite(s, draws, seed).unwrap()
}

fn summary_line(s: &SuiteSummary) -> String {
    format!(
        "{}: {}/{} passed, worst margin {:.3e}",
        s.suite,
        s.passed,
        s.draws,
        s.worst_margin.unwrap_or(f64::NAN)
    )
}

#[test]
fn criterion_06_symmetric_sdpi() {
    let s = suite(Suite::Sdpi, 10_000, 6);
    let best = s.stats["best_ratio"];
    let ok = s.ok() && best <= 0.36 + 1e-9 && best >= 0.34;
    verdict(6, ok, &format!("{}, best ratio {best:.6} (window [0.34, 0.36])", summary_line(&s)));
}

#[test]
fn criterion_07_tilted_sdpi() {
    let s = suite(Suite::Tilted, 10_000, 7);
    verdict(7, s.ok() && s.draws == 10_000, &summary_line(&s));
}

#[test]
fn criterion_08_binary_input_contraction() {
    let s = suite(Suite::Contraction, 10_000, 8);
    verdict(8, s.ok() && s.draws == 10_000, &summary_line(&s));
}

#[test]
fn criterion_09_interactive_chain() {
    let s = suite(Suite::Chain, 200, 9);
    verdict(9, s.ok() && s.draws == 200, &summary_line(&s));
}

#[test]
fn criterion_10_tensorization() {
    let s = suite(Suite::Tensor, 500, 10);
    verdict(10, s.ok() && s.draws == 500, &summary_line(&s));
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Largest z-score among the marginal means, second moments and the mean
/// product of a shifted batch with target correlation `rho`.
fn shift_z(b: &PairBatch, rho: f64) -> f64 {
    let n = b.len() as f64;
    let mut z: f64 = 0.0;
    for col in [b.x(), b.y()] {
        z = z.max(mean(col).abs() * n.sqrt());
        if b.family() == Family::Gaussian {
            let m2 = col.iter().map(|v| v * v).sum::<f64>() / n;
            z = z.max((m2 - 1.0).abs() / (2.0 / n).sqrt());
        }
    }
    // Var(XY) is 1 − ρ² for ±1 pairs and 1 + ρ² for unit Gaussians.
    let var_xy = match b.family() {
        Family::Binary => 1.0 - rho * rho,
        Family::Gaussian => 1.0 + rho * rho,
    };
    z.max((b.mean_product() - rho).abs() / (var_xy / n).sqrt())
}

#[test]
fn criterion_11_correlation_shift() {
    let s = suite(Suite::Shift, 100, 11);
    const N: usize = 1_000_000;
    let mut worst_z: f64 = 0.0;
    for (i, family) in [Family::Binary, Family::Gaussian].into_iter().enumerate() {
        let params = ShiftParams::new(family, 0.25, 0.5).unwrap();
        for (j, input) in [0.0, params.input_rho()].into_iter().enumerate() {
            let seed = 1100 + 10 * i as u64 + 2 * j as u64;
            let batch = gen_pairs(&CorrelationModel::new(family, input).unwrap(), N, seed).unwrap();
            let shifted = shift_correlation(&batch, &params, seed + 1).unwrap();
            worst_z = worst_z.max(shift_z(&shifted, params.output_rho(input)));
        }
    }
    verdict(
        11,
        s.ok() && s.draws == 100 && worst_z <= 3.0,
        &format!("{}, worst shift MC z-score {worst_z:.3} (limit 3)", summary_line(&s)),
    );
}

#[test]
fn criterion_12_gap_hamming() {
    let s = suite(Suite::GapHamming, 100, 12);
    verdict(12, s.ok() && s.draws == 100, &summary_line(&s));
}

#[test]
fn criterion_13_fisher() {
    let fam = ParamFamily::binary_pair();
    let mut worst: f64 = 0.0;
    for rho in [0.0, 0.5, 0.9] {
        let fd = fisher_fd(&fam, rho, 1e-3).unwrap();
        worst = worst.max((fd - 1.0 / (1.0 - rho * rho)).abs());
        worst = worst.max((binary_pair_fisher(rho) - 1.0 / (1.0 - rho * rho)).abs());
    }
    let mut prior_ok = true;
    for (c, h) in [(0.0, 0.5), (0.6, 0.1), (-0.3, 0.02)] {
        let prior = CosinePrior::new(c, h).unwrap();
        let exact = (PI / h).powi(2);
        prior_ok &= prior.fisher_info() == exact;
        prior_ok &= (prior.fisher_info_quadrature() / exact - 1.0).abs() < 1e-9;
        let avg = prior.expect(|t| binary_pair_fisher(t.clamp(-0.999, 0.999)));
        prior_ok &= bayes_cr_bound(exact, avg).unwrap() == 1.0 / (exact + avg);
    }
    verdict(
        13,
        worst <= 1e-4 && prior_ok,
        &format!("worst Fisher error {worst:.2e} (limit 1e-4), cosine prior I = (pi/h)^2: {prior_ok}"),
    );
}

#[test]
fn criterion_14_expected_max_normal() {
    let two = expected_max_normal(2).unwrap();
    let err2 = (two - 1.0 / PI.sqrt()).abs();
    const M: u64 = 10_000_000;
    let ln_n = 1024f64.ln();
    let mut rng = substream(14, "acceptance-max-normal", 0);
    let mc = (0..M).map(|_| sample_max_normal(ln_n, &mut rng)).sum::<f64>() / M as f64;
    let quad = expected_max_normal(1024).unwrap();
    let err1024 = (quad - mc).abs();
    verdict(
        14,
        err2 <= 1e-6 && err1024 <= 1e-3,
        &format!("N=2 error {err2:.2e} (limit 1e-6), N=1024 quadrature {quad:.6} vs MC {mc:.6} (limit 1e-3)"),
    );
}

fn corrsim_bytes(args: &[&str], out: &std::path::Path) -> Vec<u8> {
    let mut full: Vec<&str> = args.to_vec();
    full.extend(["--out", out.to_str().unwrap()]);
    let status = Command::new(env!("CARGO_BIN_EXE_corrsim")).args(&full).output().unwrap().status;
    assert!(status.success(), "{args:?}");
    std::fs::read(out).unwrap()
}

#[test]
fn criterion_15_reproducibility() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("grid.toml");
    std::fs::write(
        &cfg,
        "rho = [0.0, 0.6]\nk = [12, 18]\ntrials = 2000\nseed = 15\n\n[[schemes]]\nscheme = \"max\"\n\n[[schemes]]\nscheme = \"local\"\n\n[[schemes]]\nscheme = \"block\"\nrho_tilde = 0.25\n\n[[schemes]]\nscheme = \"two_way\"\n",
    )
    .unwrap();
    let cfg = cfg.to_str().unwrap();
    let out = dir.path().join("out");
    let commands: Vec<Vec<&str>> = vec![
        vec!["simulate", "--config", cfg],
        vec!["simulate", "--config", cfg, "--format", "json"],
        vec!["simulate", "--scheme", "naive", "--k", "64", "--rho", "-0.5,0.5", "--trials", "5000", "--seed", "3"],
        vec!["bounds", "--k", "16,256", "--rho", "0,0.5,0.9"],
        vec!["verify", "--suite", "all", "--draws", "20", "--seed", "15", "--format", "json"],
        vec!["maxnormal", "--n", "2,2^10,2^1000"],
    ];
    let mut differing = Vec::new();
    for args in &commands {
        if corrsim_bytes(args, &out) != corrsim_bytes(args, &out) {
            differing.push(args[0]);
        }
    }
    verdict(
        15,
        differing.is_empty(),
        &format!("{} commands run twice, differing: {differing:?}", commands.len()),
    );
}
