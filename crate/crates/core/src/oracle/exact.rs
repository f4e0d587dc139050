use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::{Budget, Model};
use crate::prob::StochKernel;

/// Deterministic selection: one choice index (into `model.choices(u)`) per pool.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct SelectionMap {
    pub assignment: Vec<usize>,
}

impl SelectionMap {
    pub fn new(model: &Model, assignment: Vec<usize>) -> Result<Self> {
        if assignment.len() != model.n_pools() {
            return Err(Error::Length(format!(
                "map covers {} pools, model has {}",
                assignment.len(),
                model.n_pools()
            )));
        }
        for (u, &c) in assignment.iter().enumerate() {
            if c >= model.choices(u).len() {
                return Err(Error::Support(format!("pool {u} has no choice {c}")));
            }
        }
        Ok(SelectionMap { assignment })
    }

    pub fn rows(&self, model: &Model) -> Vec<Vec<f64>> {
        self.assignment
            .iter()
            .enumerate()
            .map(|(u, &c)| {
                let mut r = vec![0.0; model.choices(u).len()];
                r[c] = 1.0;
                r
            })
            .collect()
    }

    pub fn kernel(&self, model: &Model) -> Result<StochKernel> {
        model.selection_kernel(&self.rows(model))
    }

    /// Mixed-radix id with pool 0 as the most significant digit.
    pub fn id(&self, model: &Model) -> u128 {
        self.assignment
            .iter()
            .enumerate()
            .fold(0u128, |acc, (u, &c)| acc * model.choices(u).len() as u128 + c as u128)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExcessResult {
    /// `P[d(W^k; H^k) > d]`.
    pub eps: f64,
    pub avg_distortion: f64,
}

/// Per-letter `(mass, d(w;h))` of `P_W P_{U|W} S A`, merged by distortion value.
pub(crate) fn letter_law(model: &Model, selection: &StochKernel) -> Result<Vec<(f64, f64)>> {
    if selection.n_in() != model.n_pools() || selection.n_out() != model.selections.datasets.len() {
        return Err(Error::Alphabet("selection kernel does not match the model".into()));
    }
    let mut out: Vec<(f64, f64)> = Vec::new();
    for w in 0..model.problem.n_w {
        let pw = model.problem.p_w.get(w);
        for u in 0..model.n_pools() {
            let pwu = pw * model.pools.p_u_given_w.get(w, u);
            if pwu <= 0.0 {
                continue;
            }
            for (t, &s) in selection.row(u).iter().enumerate() {
                if s <= 0.0 {
                    continue;
                }
                if !model.choices(u).iter().any(|c| c.dataset == t) {
                    return Err(Error::Support(format!("pool {u} cannot select dataset {t}")));
                }
                for (h, &a) in model.algo.row(t).iter().enumerate() {
                    if a > 0.0 {
                        out.push((pwu * s * a, model.problem.distortion[w][h]));
                    }
                }
            }
        }
    }
    out.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(out.len());
    for (p, d) in out {
        match merged.last_mut() {
            Some(last) if last.1 == d => last.0 += p,
            _ => merged.push((p, d)),
        }
    }
    Ok(merged)
}

/// Exact excess-distortion probability of a per-letter selection over `k`
/// i.i.d. letters, by full enumeration of the letter outcomes.
pub fn exact_excess_probability(
    model: &Model,
    selection: &StochKernel,
    d: f64,
    k: usize,
    budget: Budget,
) -> Result<ExcessResult> {
    if k == 0 {
        return Err(Error::Domain("k must be positive".into()));
    }
    let law = letter_law(model, selection)?;
    let cells = crate::instance::checked_pow(law.len(), k);
    budget.check("letter outcomes (use Monte Carlo for larger k)", cells)?;
    let avg: f64 = law.iter().map(|(p, x)| p * x).sum();
    let kf = k as f64;
    let mut eps = 0.0;
    let mut idx = vec![0usize; k];
    loop {
        let mut p = 1.0;
        let mut sum = 0.0;
        for &i in &idx {
            p *= law[i].0;
            sum += law[i].1;
        }
        if sum / kf > d {
            eps += p;
        }
        let mut pos = k;
        loop {
            if pos == 0 {
                return Ok(ExcessResult {
                    eps: eps.min(1.0),
                    avg_distortion: avg,
                });
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < law.len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}
