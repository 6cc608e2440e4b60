//! Brute-force verification of the information inequalities behind the
//! lower bounds, on finite instances small enough to materialize.
//!
//! A protocol is an [`InteractiveSpec`]: a stack of conditional tables in
//! which odd rounds read Alice's `X` and even rounds read Bob's `Y`, each
//! together with the full history. [`build_joint`] multiplies it out
//! against a source; the verifiers then evaluate exact divergences and
//! mutual informations on the resulting table.

mod chain;
mod ratio;
mod spec;
mod sweep;
mod tensor;
mod tilted;

pub use chain::{
    chain_report_from_joints, corrupted_chain_fixture, gap_hamming_demo, majority_spec, verify_interactive_chain,
    verify_shift_reduction, ChainReport, GapHammingReport, ShiftReport, CHAIN_TOL,
};
#[allow(non_snake_case)]
pub use ratio::compute_R_S;
pub use ratio::{
    rs_from_joint, search_max_ratio, search_max_ratio_with, RSValue, SearchConfig, SearchResult, RATIO_S_FLOOR,
};
pub use spec::{
    binary_product_source, build_joint, random_row, InteractiveSpec, RoundChannel, MAX_JOINT_ENTRIES,
};
pub use sweep::{
    run_injected_fixture, run_suite, Check, Instance, Suite, SuiteSummary, Violation, CHAIN_RHOS, GAP_HAMMING,
    MAX_RECORDED_VIOLATIONS, SDPI_RHO, SHIFT_PAIR, TENSOR_RHOS, TILTED_RHO,
};
pub use tensor::{verify_tensorization, TensorChecker, TensorReport, SEARCH_SLACK};
pub use tilted::{binary_input_contraction, tilted_source, verify_tilted_sdpi, ContractionReport, TiltedReport, TILT_TOL};
