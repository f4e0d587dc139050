use super::problem::{Algorithm, CanonicalDataset, Problem};
use crate::error::{Error, Result};
use crate::prob::StochKernel;

/// Summed per-sample risk of hypothesis `h` on `t`.
pub fn empirical_risk(p: &Problem, h: usize, t: &CanonicalDataset) -> f64 {
    t.samples().iter().map(|&s| p.sample_risk(h, s)).sum()
}

/// Point mass on the empirical risk minimizers, split evenly over ties.
pub fn erm_row(p: &Problem, t: &CanonicalDataset) -> Vec<f64> {
    let risks: Vec<f64> = (0..p.n_h).map(|h| empirical_risk(p, h, t)).collect();
    let best = risks.iter().copied().fold(f64::INFINITY, f64::min);
    let ties: Vec<bool> = risks
        .iter()
        .map(|&r| if best.is_finite() { (r - best).abs() <= 1e-12 * best.abs().max(1.0) } else { true })
        .collect();
    let count = ties.iter().filter(|t| **t).count() as f64;
    ties.iter().map(|&t| if t { 1.0 / count } else { 0.0 }).collect()
}

/// `P(h | t) ∝ exp(-beta * risk(h, t))`; `beta = 0` gives the uniform row.
pub fn gibbs_row(p: &Problem, beta: f64, t: &CanonicalDataset) -> Vec<f64> {
    let energy: Vec<f64> = (0..p.n_h)
        .map(|h| {
            let r = empirical_risk(p, h, t);
            if beta == 0.0 {
                0.0
            } else {
                beta * r
            }
        })
        .collect();
    let lo = energy.iter().copied().fold(f64::INFINITY, f64::min);
    if !lo.is_finite() {
        return vec![1.0 / p.n_h as f64; p.n_h];
    }
    let un: Vec<f64> = energy.iter().map(|e| (lo - e).exp()).collect();
    let z: f64 = un.iter().sum();
    un.into_iter().map(|v| v / z).collect()
}

/// Learner kernel over `datasets` (rows in the given order) to hypotheses.
pub fn build_algorithm_kernel(p: &Problem, datasets: &[CanonicalDataset]) -> Result<StochKernel> {
    let rows = datasets
        .iter()
        .map(|t| match &p.algorithm {
            Algorithm::Erm => Ok(erm_row(p, t)),
            Algorithm::Gibbs { beta } => {
                if !(*beta >= 0.0) {
                    return Err(Error::validation("algorithm.beta", None, format!("negative beta {beta}")));
                }
                Ok(gibbs_row(p, *beta, t))
            }
            Algorithm::Explicit { rows } => rows
                .iter()
                .find(|(d, _)| d == t)
                .map(|(_, r)| r.clone())
                .ok_or_else(|| Error::Coverage(p.format_dataset(t))),
        })
        .collect::<Result<Vec<_>>>()?;
    StochKernel::named("algorithm", rows)
}
