use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::{build_algorithm_kernel, checked_pow, Budget, CanonicalDataset, Problem};

/// Both sides of the Efron-Stein inequality for one sub-distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EfronStein {
    pub w: usize,
    /// `Var(E_A[d(w;H) | T])` over `T` of `k` i.i.d. samples.
    pub lhs: f64,
    /// `1/2 sum_i E[(f(T) - f(T^i))^2]`, `T^i` with sample `i` resampled.
    pub rhs: f64,
    pub holds: bool,
}

/// Exact enumeration of `(T, replacement)` pairs per sub-distribution.
pub fn efron_stein_check(problem: &Problem, k: usize, budget: Budget) -> Result<Vec<EfronStein>> {
    if k == 0 {
        return Err(Error::Domain("k must be positive".into()));
    }
    let ns = problem.n_samples();
    let cells = checked_pow(ns, k + 1).saturating_mul(k as u128);
    budget.check("Efron-Stein sample pairs", cells)?;
    let mut cache: HashMap<CanonicalDataset, Vec<f64>> = HashMap::new();
    let mut row = |t: Vec<usize>| -> Result<Vec<f64>> {
        let t = CanonicalDataset::new(t);
        if let Some(r) = cache.get(&t) {
            return Ok(r.clone());
        }
        let r = build_algorithm_kernel(problem, std::slice::from_ref(&t))?.row(0).to_vec();
        cache.insert(t, r.clone());
        Ok(r)
    };
    let seqs: Vec<Vec<usize>> = sequences(ns, k);
    let mut out = Vec::with_capacity(problem.n_w);
    for w in 0..problem.n_w {
        let f = |r: &[f64]| -> f64 { r.iter().zip(&problem.distortion[w]).map(|(a, d)| a * d).sum() };
        let ps: Vec<f64> = (0..ns).map(|s| problem.sample_mass(w, s)).collect();
        let mut fs = Vec::with_capacity(seqs.len());
        let mut pt = Vec::with_capacity(seqs.len());
        for s in &seqs {
            pt.push(s.iter().map(|&x| ps[x]).product::<f64>());
            fs.push(f(&row(s.clone())?));
        }
        let mean: f64 = pt.iter().zip(&fs).map(|(p, v)| p * v).sum();
        let lhs: f64 = pt.iter().zip(&fs).map(|(p, v)| p * (v - mean).powi(2)).sum();
        let mut rhs = 0.0;
        for (si, s) in seqs.iter().enumerate() {
            if pt[si] <= 0.0 {
                continue;
            }
            for i in 0..k {
                for (r, &pr) in ps.iter().enumerate() {
                    if pr <= 0.0 {
                        continue;
                    }
                    let mut t = s.clone();
                    t[i] = r;
                    let fr = f(&row(t)?);
                    rhs += pt[si] * pr * (fs[si] - fr).powi(2);
                }
            }
        }
        rhs *= 0.5;
        out.push(EfronStein {
            w,
            lhs,
            rhs,
            holds: lhs <= rhs + 1e-12,
        });
    }
    Ok(out)
}

fn sequences(base: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|s| {
                (0..base).map(move |x| {
                    let mut t = s.clone();
                    t.push(x);
                    t
                })
            })
            .collect();
    }
    out
}
