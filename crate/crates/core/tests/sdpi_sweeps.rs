//! Property sweeps of the inequality verifiers and replay of serialized
//! instances.

use corrsim::info::FiniteJoint;
use corrsim::sdpi::{
    compute_R_S, run_injected_fixture, run_suite, search_max_ratio, tilted_source, verify_tilted_sdpi, Instance,
    InteractiveSpec, Suite,
};

#[test]
fn every_suite_passes_a_moderate_sweep() {
    for (suite, draws) in [
        (Suite::Sdpi, 500),
        (Suite::Tilted, 2000),
        (Suite::Contraction, 2000),
        (Suite::Tensor, 100),
        (Suite::Chain, 200),
        (Suite::Shift, 100),
        (Suite::GapHamming, 10),
    ] {
        let s = run_suite(suite, draws, 2024).unwrap();
        assert_eq!(s.passed, draws, "{suite}: {:?}", s.violations);
    }
}

#[test]
fn tilted_source_obeys_the_same_ceiling() {
    let src = tilted_source(0.6, &[0.2, 1.0], &[1.0, 0.35]).unwrap();
    let res = search_max_ratio(&src, 3, 3, 1000, 8).unwrap();
    assert!(res.best.ratio <= 0.36 + 1e-9, "{:?}", res.best);
    assert!(res.best.ratio > 0.2);
    let again = compute_R_S(&res.spec, &src).unwrap();
    assert_eq!(again, res.best);
}

#[test]
fn copy_channel_reduces_to_mutual_information() {
    let id = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
    let r = verify_tilted_sdpi(0.5, &[1.0, 1.0], &[1.0, 1.0], &id, &id).unwrap();
    let spec = InteractiveSpec::one_way(2, 2, id).unwrap();
    let v = compute_R_S(&spec, &FiniteJoint::binary_symmetric(0.5).unwrap()).unwrap();
    assert!((r.i_uy / r.i_ux - v.ratio).abs() < 1e-12);
}

#[test]
fn violations_replay_from_json() {
    let s = run_injected_fixture().unwrap();
    assert!(!s.ok());
    let json = serde_json::to_string(&s.violations[0].instance).unwrap();
    let back: Instance = serde_json::from_str(&json).unwrap();
    assert_eq!(back, s.violations[0].instance);
    let check = back.check().unwrap();
    assert!(!check.passed);
    assert_eq!(check.margin, s.violations[0].margin);
}

#[test]
fn passing_instances_replay_too() {
    let mut rng = corrsim::rng::stream(1, "replay");
    let spec = InteractiveSpec::random(2, 2, 3, 3, 0.2, &mut rng);
    let inst = Instance::Shift {
        rho0: 0.25,
        rho1: 0.5,
        spec,
    };
    let back: Instance = serde_json::from_str(&serde_json::to_string(&inst).unwrap()).unwrap();
    assert!(back.check().unwrap().passed);
}
