use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{compute_d_bounds, Model};
use crate::prob::{FiniteDist, StochKernel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Stop when the objective decreases by less than this (nats).
    pub tol_outer: f64,
    /// Frank-Wolfe duality gap per row.
    pub tol_inner: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    /// Relative bracket width of the step-size line search.
    pub line_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol_outer: 1e-10,
            tol_inner: 1e-9,
            max_outer: 10_000,
            max_inner: 5_000,
            line_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub outer_iters: usize,
    pub final_objective_delta: f64,
    pub inner_gap: f64,
}

/// One solution of `min_S I(U;H) + lambda E[dbar(U;H)]`.
#[derive(Debug, Clone, Serialize)]
pub struct LagrangianPoint {
    pub lambda: f64,
    pub rate: f64,
    pub avg_distortion: f64,
    /// Pool support -> dataset registry.
    pub selection_kernel: StochKernel,
    pub h_marginal: FiniteDist,
    pub convergence: Convergence,
    /// Per-pool weights over that pool's feasible choices.
    #[serde(skip)]
    pub rows: Vec<Vec<f64>>,
}

/// `P_{H|U=u}` for per-choice weights `s`.
pub fn h_given_u(model: &Model, u: usize, s: &[f64]) -> Vec<f64> {
    let mut p = vec![0.0; model.problem.n_h];
    for (c, &w) in model.choices(u).iter().zip(s) {
        if w > 0.0 {
            for (ph, a) in p.iter_mut().zip(model.algo.row(c.dataset)) {
                *ph += w * a;
            }
        }
    }
    p
}

fn marginal(model: &Model, ph: &[Vec<f64>]) -> Vec<f64> {
    let mut q = vec![0.0; model.problem.n_h];
    for (u, row) in ph.iter().enumerate() {
        let pu = model.pools.p_u.get(u);
        for (qh, p) in q.iter_mut().zip(row) {
            *qh += pu * p;
        }
    }
    q
}

fn kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(&a, &b)| {
            if a <= 0.0 {
                0.0
            } else if b <= 0.0 {
                f64::INFINITY
            } else {
                a * (a / b).ln()
            }
        })
        .sum()
}

/// Exact `(I(U;H), E[dbar(U;H)], P_H)` of a selection given as per-pool rows.
pub fn evaluate_rows(model: &Model, rows: &[Vec<f64>]) -> (f64, f64, Vec<f64>) {
    let ph: Vec<Vec<f64>> = rows.iter().enumerate().map(|(u, s)| h_given_u(model, u, s)).collect();
    let q = marginal(model, &ph);
    let mut rate = 0.0;
    let mut dist = 0.0;
    for u in 0..model.n_pools() {
        let pu = model.pools.p_u.get(u);
        rate += pu * kl(&ph[u], &q);
        dist += pu * model.cost[u].iter().zip(&rows[u]).map(|(c, s)| c * s).sum::<f64>();
    }
    (rate.max(0.0), dist, q)
}

pub fn uniform_rows(model: &Model) -> Vec<Vec<f64>> {
    (0..model.n_pools())
        .map(|u| {
            let k = model.choices(u).len();
            vec![1.0 / k as f64; k]
        })
        .collect()
}

/// Build a point from rows without optimizing them.
pub fn point_from_rows(model: &Model, lambda: f64, rows: Vec<Vec<f64>>, convergence: Convergence) -> Result<LagrangianPoint> {
    let (rate, avg_distortion, q) = evaluate_rows(model, &rows);
    Ok(LagrangianPoint {
        lambda,
        rate,
        avg_distortion,
        selection_kernel: model.selection_kernel(&rows)?,
        h_marginal: FiniteDist::named("h_marginal", q)?,
        convergence,
        rows,
    })
}

pub fn solve_lagrangian(model: &Model, lambda: f64, config: &SolverConfig) -> Result<LagrangianPoint> {
    solve_lagrangian_from(model, lambda, config, None)
}

/// As [`solve_lagrangian`], warm-started from `init` rows when given.
pub fn solve_lagrangian_from(
    model: &Model,
    lambda: f64,
    config: &SolverConfig,
    init: Option<&[Vec<f64>]>,
) -> Result<LagrangianPoint> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::Domain(format!("lambda must be finite and nonnegative, got {lambda}")));
    }
    if lambda == 0.0 {
        if let Some(rows) = compute_d_bounds(model)?.constant_rows {
            let conv = Convergence {
                outer_iters: 0,
                final_objective_delta: 0.0,
                inner_gap: 0.0,
            };
            return point_from_rows(model, 0.0, rows, conv);
        }
    }
    let mut rows = match init {
        Some(r) if r.len() == model.n_pools() => r.to_vec(),
        _ => uniform_rows(model),
    };
    let objective = |rows: &[Vec<f64>]| {
        let (r, d, _) = evaluate_rows(model, rows);
        r + lambda * d
    };
    let mut f_prev = objective(&rows);
    let mut last_gap = f64::INFINITY;
    for outer in 1..=config.max_outer {
        let ph: Vec<Vec<f64>> = rows.iter().enumerate().map(|(u, s)| h_given_u(model, u, s)).collect();
        let q = marginal(model, &ph);
        last_gap = 0.0;
        for (u, s) in rows.iter_mut().enumerate() {
            let gap = frank_wolfe_row(model, u, s, &q, lambda, config)?;
            last_gap = last_gap.max(gap);
        }
        let f = objective(&rows);
        let delta = f_prev - f;
        debug_assert!(
            delta >= -1e-9 * f.abs().max(1.0),
            "objective increased by {} at lambda {lambda}",
            -delta
        );
        f_prev = f;
        if delta.abs() < config.tol_outer {
            let conv = Convergence {
                outer_iters: outer,
                final_objective_delta: delta,
                inner_gap: last_gap,
            };
            return point_from_rows(model, lambda, rows, conv);
        }
    }
    Err(Error::Convergence {
        iterations: config.max_outer,
        last_gap,
        context: format!("alternating minimization at lambda {lambda}"),
    })
}

/// Per-row objective `KL(M s || q) + lambda c . s` and its gradient in `s`.
struct RowProblem<'a> {
    a: Vec<&'a [f64]>,
    c: &'a [f64],
    q: &'a [f64],
    lambda: f64,
}

impl RowProblem<'_> {
    fn mix(&self, s: &[f64]) -> Vec<f64> {
        let mut p = vec![0.0; self.q.len()];
        for (row, &w) in self.a.iter().zip(s) {
            if w > 0.0 {
                for (ph, &v) in p.iter_mut().zip(row.iter()) {
                    *ph += w * v;
                }
            }
        }
        p
    }

    fn gradient(&self, p: &[f64]) -> Vec<f64> {
        let dlog: Vec<f64> = p
            .iter()
            .zip(self.q)
            .map(|(&ph, &qh)| {
                if qh <= 0.0 {
                    f64::INFINITY
                } else if ph <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    (ph / qh).ln() + 1.0
                }
            })
            .collect();
        self.a
            .iter()
            .zip(self.c)
            .map(|(row, &c)| {
                let mut g = self.lambda * c;
                for (&v, &d) in row.iter().zip(&dlog) {
                    if v > 0.0 {
                        g += v * d;
                    }
                }
                g
            })
            .collect()
    }
}

/// Away-step Frank-Wolfe on one row; returns the final duality gap.
fn frank_wolfe_row(model: &Model, u: usize, s: &mut [f64], q: &[f64], lambda: f64, config: &SolverConfig) -> Result<f64> {
    let prob = RowProblem {
        a: model.choices(u).iter().map(|c| model.algo.row(c.dataset)).collect(),
        c: &model.cost[u],
        q,
        lambda,
    };
    let k = s.len();
    if k == 1 {
        return Ok(0.0);
    }
    let mut gap = f64::INFINITY;
    for _ in 0..config.max_inner {
        let p = prob.mix(s);
        let g = prob.gradient(&p);
        let sg: f64 = s.iter().zip(&g).filter(|(w, _)| **w > 0.0).map(|(w, gi)| w * gi).sum();
        let fw = (0..k).min_by(|&i, &j| g[i].total_cmp(&g[j])).unwrap();
        let away = (0..k)
            .filter(|&i| s[i] > 0.0)
            .max_by(|&i, &j| g[i].total_cmp(&g[j]))
            .unwrap();
        let gap_fw = sg - g[fw];
        let gap_away = g[away] - sg;
        gap = if gap_fw.is_nan() { f64::INFINITY } else { gap_fw };
        if gap < config.tol_inner {
            return Ok(gap.max(0.0));
        }
        // Direction d and maximal step.
        let mut d = vec![0.0; k];
        let gmax;
        if gap_fw >= gap_away || s[away] >= 1.0 {
            for (i, di) in d.iter_mut().enumerate() {
                *di = -s[i];
            }
            d[fw] += 1.0;
            gmax = 1.0;
        } else {
            d.copy_from_slice(s);
            d[away] -= 1.0;
            gmax = s[away] / (1.0 - s[away]);
        }
        let pd = {
            let mut v = vec![0.0; q.len()];
            for (row, &di) in prob.a.iter().zip(&d) {
                if di != 0.0 {
                    for (vh, &a) in v.iter_mut().zip(row.iter()) {
                        *vh += di * a;
                    }
                }
            }
            v
        };
        let lin: f64 = lambda * prob.c.iter().zip(&d).map(|(c, di)| c * di).sum::<f64>();
        // Directional derivative; sum_h pd_h = 0 so the constant in the
        // log-derivative drops out.
        let dphi = |t: f64| {
            let mut acc = lin;
            for ((&ph, &dh), &qh) in p.iter().zip(&pd).zip(q) {
                if dh == 0.0 {
                    continue;
                }
                let pt = ph + t * dh;
                let log = if pt <= 0.0 { f64::NEG_INFINITY } else { (pt / qh).ln() };
                acc += dh * log;
            }
            acc
        };
        let t = line_search(dphi, gmax, config.line_tol);
        if t == 0.0 {
            // No descent is resolvable at this precision.
            return Ok(gap);
        }
        for (si, di) in s.iter_mut().zip(&d) {
            *si = (*si + t * di).max(0.0);
        }
        if t >= gmax && d[away] < 0.0 {
            s[away] = 0.0;
        }
        let total: f64 = s.iter().sum();
        for si in s.iter_mut() {
            *si /= total;
        }
    }
    Err(Error::Convergence {
        iterations: config.max_inner,
        last_gap: gap,
        context: format!("Frank-Wolfe on pool {u}"),
    })
}

/// Step minimizing a convex 1-D function on `[0, tmax]` from the sign of
/// its derivative, bisected to `tol * tmax`.
fn line_search<F: Fn(f64) -> f64>(dphi: F, tmax: f64, tol: f64) -> f64 {
    if !(dphi(0.0) < 0.0) {
        return 0.0;
    }
    if dphi(tmax) <= 0.0 {
        return tmax;
    }
    let (mut a, mut b) = (0.0, tmax);
    while b - a > tol * tmax {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if dphi(mid) < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}
