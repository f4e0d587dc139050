//! Problem instances: alphabets, true distributions, hypotheses, learners,
//! pools, feasible selections and the achievable distortion range.

mod algorithm;
mod model;
mod pool;
mod problem;
mod selection;
mod spec;

pub use algorithm::{build_algorithm_kernel, empirical_risk, erm_row, gibbs_row};
pub use model::{compute_d_bounds, validate_instance, validate_with_budget, DBounds, Model};
pub use pool::{enumerate_pool_space, posterior_distortion, Budget, PoolSpace};
pub(crate) use problem::checked_pow;
pub use problem::{block_distortion, distortion, Algorithm, CanonicalDataset, Diagnostics, Problem};
pub use selection::{binomial, feasible_selections, subset_count, Choice, SelectionSpace, Selections};
pub use spec::{
    AlgorithmKind, AlgorithmSpec, DistortionMode, ExplicitRow, HypothesisSpec, LossSpec, ProblemInstance,
    SelectionMode,
};

pub mod fixtures;
