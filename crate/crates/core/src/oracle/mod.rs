mod efron_stein;
mod enumerate;
mod exact;
mod simulate;

pub use efron_stein::{efron_stein_check, EfronStein};
pub use enumerate::{enumerate_selections, for_each_map, map_count, EnumerationReport, NEntry};
pub use exact::{exact_excess_probability, ExcessResult, SelectionMap};
pub use simulate::{
    simulate_block, trial_rng, wilson_interval, write_sim_csv, LearnerScope, SimConfig, SimReport, Strategy,
};
