use minilp::{ComparisonOp, OptimizationDirection, Problem as Lp};
use serde::Serialize;

use super::algorithm::build_algorithm_kernel;
use super::pool::{enumerate_pool_space, Budget, PoolSpace};
use super::problem::{checked_pow, Diagnostics, Problem};
use super::selection::SelectionSpace;
use super::spec::{ProblemInstance, SelectionMode};
use crate::error::{Error, Result};
use crate::prob::StochKernel;

/// Everything the solvers need: pools, feasible datasets, learner kernel
/// and the per-pool costs `c(u, t) = sum_h A(h|t) dbar(u; h)`.
#[derive(Debug, Clone)]
pub struct Model {
    pub problem: Problem,
    pub n: Option<usize>,
    pub pools: PoolSpace,
    pub selections: SelectionSpace,
    /// Rows follow `selections.datasets`.
    pub algo: StochKernel,
    /// `dbar[u][h]`.
    pub dbar: Vec<Vec<f64>>,
    /// `cost[u][j]` for the `j`-th choice of pool `u`.
    pub cost: Vec<Vec<f64>>,
}

impl Model {
    pub fn from_instance(inst: &ProblemInstance, budget: Budget) -> Result<Model> {
        Model::build(Problem::compile(inst)?, None, budget)
    }

    /// `n` overrides the instance's selection budget.
    pub fn build(problem: Problem, n: Option<usize>, budget: Budget) -> Result<Model> {
        let n = n.or(problem.n);
        if let Some(v) = n {
            if v == 0 || v > problem.m {
                return Err(Error::validation("n", None, format!("need 1 <= n <= m = {}, got {v}", problem.m)));
            }
        }
        let pools = enumerate_pool_space(&problem, budget)?;
        let selections = SelectionSpace::build(&problem, &pools, n, budget)?;
        let algo = build_algorithm_kernel(&problem, &selections.datasets)?;
        let dbar: Vec<Vec<f64>> = (0..pools.len())
            .map(|u| {
                (0..problem.n_h)
                    .map(|h| (0..problem.n_w).map(|w| pools.p_w_given_u.get(u, w) * problem.distortion[w][h]).sum())
                    .collect()
            })
            .collect();
        let cost = selections
            .per_pool
            .iter()
            .enumerate()
            .map(|(u, choices)| {
                choices
                    .iter()
                    .map(|c| algo.row(c.dataset).iter().zip(&dbar[u]).map(|(a, d)| a * d).sum())
                    .collect()
            })
            .collect();
        Ok(Model {
            problem,
            n,
            pools,
            selections,
            algo,
            dbar,
            cost,
        })
    }

    pub fn n_pools(&self) -> usize {
        self.pools.len()
    }

    pub fn choices(&self, u: usize) -> &[super::selection::Choice] {
        &self.selections.per_pool[u]
    }

    /// `E_{P_U}[dbar(U; h)] = sum_w P_W(w) d(w; h)`.
    pub fn mean_distortion(&self, h: usize) -> f64 {
        (0..self.problem.n_w)
            .map(|w| self.problem.p_w.get(w) * self.problem.distortion[w][h])
            .sum()
    }

    /// Expand per-pool choice weights into a kernel over the global registry.
    pub fn selection_kernel(&self, rows: &[Vec<f64>]) -> Result<StochKernel> {
        let nd = self.selections.datasets.len();
        let full = rows
            .iter()
            .enumerate()
            .map(|(u, r)| {
                let mut out = vec![0.0; nd];
                for (c, v) in self.choices(u).iter().zip(r) {
                    out[c.dataset] = *v;
                }
                out
            })
            .collect();
        StochKernel::named("selection", full)
    }
}

/// Extremes of the achievable expected distortion.
#[derive(Debug, Clone, Serialize)]
pub struct DBounds {
    /// Best dataset per pool.
    pub d_min: f64,
    /// `min_h sum_w P_W(w) d(w; h)` ignoring what the learner can output.
    pub d_max_unrestricted: f64,
    /// Best hypothesis mixture the learner can emit from every pool, when
    /// one exists (zero-rate point).
    pub d_max_reachable: Option<f64>,
    /// Per-pool choice weights achieving `d_max_reachable`.
    #[serde(skip)]
    pub constant_rows: Option<Vec<Vec<f64>>>,
}

pub fn compute_d_bounds(model: &Model) -> Result<DBounds> {
    let p_u = &model.pools.p_u;
    let d_min = (0..model.n_pools())
        .map(|u| p_u.get(u) * model.cost[u].iter().copied().fold(f64::INFINITY, f64::min))
        .sum();
    let dbar_h: Vec<f64> = (0..model.problem.n_h).map(|h| model.mean_distortion(h)).collect();
    let d_max_unrestricted = dbar_h.iter().copied().fold(f64::INFINITY, f64::min);
    let (d_max_reachable, constant_rows) = match constant_mixture_lp(model, &dbar_h) {
        Some((d, rows)) => (Some(d), Some(rows)),
        None => (None, None),
    };
    Ok(DBounds {
        d_min,
        d_max_unrestricted,
        d_max_reachable,
        constant_rows,
    })
}

/// Minimize `q . dbar_h` over hypothesis marginals `q` that every pool can
/// realize as a mixture of its datasets' learner rows.
fn constant_mixture_lp(model: &Model, dbar_h: &[f64]) -> Option<(f64, Vec<Vec<f64>>)> {
    let n_h = model.problem.n_h;
    let mut lp = Lp::new(OptimizationDirection::Minimize);
    let q: Vec<_> = dbar_h.iter().map(|&c| lp.add_var(c, (0.0, 1.0))).collect();
    let mut alpha = Vec::with_capacity(model.n_pools());
    for u in 0..model.n_pools() {
        let vars: Vec<_> = model.choices(u).iter().map(|_| lp.add_var(0.0, (0.0, 1.0))).collect();
        let ones: Vec<_> = vars.iter().map(|&v| (v, 1.0)).collect();
        lp.add_constraint(&ones[..], ComparisonOp::Eq, 1.0);
        for h in 0..n_h {
            let mut terms: Vec<_> = model
                .choices(u)
                .iter()
                .zip(&vars)
                .filter_map(|(c, &v)| {
                    let a = model.algo.get(c.dataset, h);
                    (a != 0.0).then_some((v, a))
                })
                .collect();
            terms.push((q[h], -1.0));
            lp.add_constraint(&terms[..], ComparisonOp::Eq, 0.0);
        }
        alpha.push(vars);
    }
    let sol = lp.solve().ok()?;
    let rows: Vec<Vec<f64>> = alpha
        .iter()
        .map(|vars| {
            let raw: Vec<f64> = vars.iter().map(|&v| sol[v].max(0.0)).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / s).collect()
        })
        .collect();
    // Re-derive the common marginal from the rows; reject numerically
    // inconsistent solutions.
    let marg = |u: usize| -> Vec<f64> {
        let mut m = vec![0.0; n_h];
        for (c, a) in model.choices(u).iter().zip(&rows[u]) {
            for (h, mh) in m.iter_mut().enumerate() {
                *mh += a * model.algo.get(c.dataset, h);
            }
        }
        m
    };
    let q0 = marg(0);
    for u in 1..model.n_pools() {
        let mu = marg(u);
        if mu.iter().zip(&q0).any(|(a, b)| (a - b).abs() > 1e-9) {
            return None;
        }
    }
    let d = (0..model.n_pools())
        .map(|u| model.pools.p_u.get(u) * model.cost[u].iter().zip(&rows[u]).map(|(c, a)| c * a).sum::<f64>())
        .sum();
    Some((d, rows))
}

/// Check every invariant of an instance and preview its distortion range.
pub fn validate_instance(inst: &ProblemInstance) -> Result<Diagnostics> {
    validate_with_budget(inst, Budget::default())
}

pub fn validate_with_budget(inst: &ProblemInstance, budget: Budget) -> Result<Diagnostics> {
    let p = Problem::compile(inst)?;
    let mut warnings = Vec::new();
    if p.selection_mode == SelectionMode::FixedN && p.n.is_none() {
        warnings.push("fixed-n selection without n: pass n explicitly to solver commands".into());
    }
    let pool_cardinality_per_w = checked_pow(p.n_samples(), p.m);
    let mut diag = Diagnostics {
        n_w: p.n_w,
        n_x: p.n_x,
        n_y: p.n_y,
        n_h: p.n_h,
        m: p.m,
        n: p.n,
        b_bits: p.b_bits,
        pool_cardinality_per_w,
        distortion: p.distortion.clone(),
        d_min: None,
        d_max_reachable: None,
        d_max_unrestricted: None,
        warnings,
    };
    if p.selection_mode == SelectionMode::FixedN && p.n.is_none() {
        return Ok(diag);
    }
    match Model::build(p, None, budget) {
        Ok(model) => {
            let b = compute_d_bounds(&model)?;
            diag.d_min = Some(b.d_min);
            diag.d_max_reachable = b.d_max_reachable;
            diag.d_max_unrestricted = Some(b.d_max_unrestricted);
            if b.d_max_reachable.is_none() {
                diag.warnings.push(
                    "no constant hypothesis mixture is reachable from every pool; the zero-rate end of the curve is a positive-rate floor".into(),
                );
            }
        }
        Err(Error::Budget { what, required, budget }) => diag
            .warnings
            .push(format!("distortion range not previewed: {what} needs {required}, budget {budget}")),
        Err(e) => return Err(e),
    }
    Ok(diag)
}
