//! Exact finite-probability toolkit: distributions, row-stochastic kernels,
//! joint tables, divergences, mutual information and information densities.
//!
//! All information quantities are in nats.

mod dist;
mod info;
mod joint;
mod kernel;
pub mod stats;

pub use dist::FiniteDist;
pub use info::{
    conditional_mutual_information, entropy, information_density, kl_divergence, mutual_information,
    posterior_kernel, posterior_row, AxisSet, Posterior,
};
pub use joint::{Axis, JointTable};
pub use kernel::StochKernel;

pub(crate) use info::kl_slices;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Check a weight vector against the probability-sum rules, renormalizing
/// small float drift. `name` ends up in the error message.
pub(crate) fn normalize_weights<T: Real>(name: &str, mut weights: Vec<T>) -> Result<Vec<T>> {
    if weights.is_empty() {
        return Err(Error::Distribution {
            name: name.to_string(),
            message: "empty weight vector".into(),
        });
    }
    for (i, w) in weights.iter().enumerate() {
        if !w.is_finite() || *w < T::zero() {
            return Err(Error::Distribution {
                name: name.to_string(),
                message: format!("weight {i} is {w}"),
            });
        }
    }
    let total: T = weights.iter().copied().sum();
    let dev = (total - T::one()).abs().as_f64();
    if dev <= T::SUM_TOL {
        Ok(weights)
    } else if dev < T::RENORM_TOL {
        for w in &mut weights {
            *w = *w / total;
        }
        Ok(weights)
    } else {
        Err(Error::Distribution {
            name: name.to_string(),
            message: format!("weights sum to {total}"),
        })
    }
}
