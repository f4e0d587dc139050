mod bounds;
mod q;
mod report;

pub use bounds::{
    block_tilted_law, epsilon_bound_from_law, theorem1_epsilon_bound, theorem1_report, theorem2_rate_bound,
    theorem3_distortion_bound, EpsilonBound, RateQuery, Variant,
};
pub use q::{q_function, q_inverse};
pub use report::{write_converse_csv, ConverseReport};
