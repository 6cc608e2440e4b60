//! Finite-alphabet information measures, Fisher information and the
//! closed-form risk references.

mod bounds;
mod fisher;
mod measures;

pub use bounds::{risk_bounds, BoundSet};
pub use fisher::{
    bayes_cr_bound, binary_pair_fisher, fisher_fd, fisher_fd_central, fisher_one_sided,
    interactive_fisher_bound, CosinePrior, ParamFamily,
};
pub use measures::{
    cond_mutual_info, entropy, kl, mi_radius_gap, mutual_info, validate_pmf, FiniteJoint, JointTable, PMF_TOL,
    TABLE_TOL,
};
