//! Two-party estimation protocols with fixed-length bit accounting, the
//! extreme-value numerics they rely on, and Monte Carlo risk estimation.
//!
//! Every scheme has a literal implementation that runs on an explicit
//! [`PairBatch`](crate::model::PairBatch). Schemes that read `2^k` samples
//! also have a distributional sampler that draws only the statistics the
//! estimator depends on; both have the same output law.

mod block;
mod extreme;
mod local;
mod max;
mod naive;
mod risk;
mod transcript;
mod two_way;

pub use block::{run_binary_block, BlockDesign, BlockParams, BlockSampler, BlockScheme};
pub use extreme::{
    asymptotic_max_normal, expected_max_normal, max_normal_moments, max_normal_moments_ln, max_normal_moments_pow2,
    sample_max_normal, var_max_normal, MaxMoments,
};
pub use local::{prefix_bits, run_local_scheme, LocalParams, LocalScheme};
pub use max::{run_max_scheme, MaxScheme, MAX_FULL_K, MAX_REDUCED_K};
pub use naive::run_naive;
pub use risk::{
    estimate_risk, estimate_risk_fn, PreparedScheme, RawMoments, RiskReport, Sampling, SchemeConfig, MIN_TRIALS,
};
pub use transcript::{
    bits_to_index, index_bits, Diagnostics, EstimateResult, Message, Payload, Speaker, Transcript,
};
pub use two_way::{
    default_first_round, pilot_estimate, reply_bits, run_two_way, TwoWayInfo, TwoWayScheme, PILOT_CLAMP,
};
