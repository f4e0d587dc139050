use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::{Budget, Model, Problem};

/// Number of deterministic maps `prod_u |feasible(u)|`.
pub fn map_count(model: &Model) -> u128 {
    (0..model.n_pools()).fold(1u128, |acc, u| acc.saturating_mul(model.choices(u).len() as u128))
}

/// Visit every deterministic map in mixed-radix order (pool 0 most
/// significant). The callback gets the choice index per pool.
pub fn for_each_map<F: FnMut(&[usize])>(model: &Model, budget: Budget, mut f: F) -> Result<u128> {
    let total = map_count(model);
    budget.check("deterministic selection maps", total)?;
    let radix: Vec<usize> = (0..model.n_pools()).map(|u| model.choices(u).len()).collect();
    let mut digits = vec![0usize; radix.len()];
    loop {
        f(&digits);
        let mut pos = radix.len();
        loop {
            if pos == 0 {
                return Ok(total);
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < radix[pos] {
                break;
            }
            digits[pos] = 0;
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NEntry {
    pub n: usize,
    pub maps: u128,
    /// Per distortion threshold.
    pub min_excess_prob: Vec<f64>,
    pub argmin_map: Vec<u128>,
    pub min_avg_distortion: f64,
}

/// Single-letter exhaustive search over deterministic selections.
#[derive(Debug, Clone, Serialize)]
pub struct EnumerationReport {
    pub d_grid: Vec<f64>,
    /// Ascending in `n`.
    pub per_n: Vec<NEntry>,
}

impl EnumerationReport {
    /// Smallest `n` whose best map meets `eps` at `d_grid[di]`.
    pub fn n_star(&self, di: usize, eps: f64) -> Option<usize> {
        self.per_n.iter().find(|e| e.min_excess_prob[di] <= eps).map(|e| e.n)
    }

    pub fn write_csv<W: Write>(&self, out: W, config_hash: &str) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(["n", "d", "min_excess_prob", "argmin_map", "min_avg_distortion", "maps", "config_hash"])?;
        for e in &self.per_n {
            for (i, d) in self.d_grid.iter().enumerate() {
                w.write_record([
                    e.n.to_string(),
                    d.to_string(),
                    e.min_excess_prob[i].to_string(),
                    e.argmin_map[i].to_string(),
                    e.min_avg_distortion.to_string(),
                    e.maps.to_string(),
                    config_hash.to_string(),
                ])?;
            }
        }
        w.flush().map_err(|e| Error::Export(e.to_string()))?;
        Ok(())
    }
}

/// Per pool and choice: `(P_U-weighted excess mass per threshold, weighted distortion)`.
fn choice_tables(model: &Model, d_grid: &[f64]) -> Vec<Vec<(Vec<f64>, f64)>> {
    (0..model.n_pools())
        .map(|u| {
            model
                .choices(u)
                .iter()
                .map(|c| {
                    let mut ex = vec![0.0; d_grid.len()];
                    let mut avg = 0.0;
                    for w in 0..model.problem.n_w {
                        let pwu = model.problem.p_w.get(w) * model.pools.p_u_given_w.get(w, u);
                        if pwu <= 0.0 {
                            continue;
                        }
                        for (h, &a) in model.algo.row(c.dataset).iter().enumerate() {
                            let dist = model.problem.distortion[w][h];
                            avg += pwu * a * dist;
                            for (e, &d) in ex.iter_mut().zip(d_grid) {
                                if dist > d {
                                    *e += pwu * a;
                                }
                            }
                        }
                    }
                    (ex, avg)
                })
                .collect()
        })
        .collect()
}

/// Exhaustive single-letter search for every label budget in `ns`.
pub fn enumerate_selections(problem: &Problem, ns: &[usize], d_grid: &[f64], budget: Budget) -> Result<EnumerationReport> {
    let mut ns = ns.to_vec();
    ns.sort_unstable();
    ns.dedup();
    let mut per_n = Vec::with_capacity(ns.len());
    for &n in &ns {
        let model = Model::build(problem.clone(), Some(n), Budget::default())?;
        let tables = choice_tables(&model, d_grid);
        let mut best = vec![(f64::INFINITY, 0u128); d_grid.len()];
        let mut best_avg = f64::INFINITY;
        let mut id = 0u128;
        let maps = for_each_map(&model, budget, |digits| {
            let mut ex = vec![0.0; d_grid.len()];
            let mut avg = 0.0;
            for (u, &c) in digits.iter().enumerate() {
                let (e, a) = &tables[u][c];
                for (x, y) in ex.iter_mut().zip(e) {
                    *x += y;
                }
                avg += a;
            }
            for (b, &e) in best.iter_mut().zip(&ex) {
                if e < b.0 {
                    *b = (e, id);
                }
            }
            best_avg = best_avg.min(avg);
            id += 1;
        })?;
        per_n.push(NEntry {
            n,
            maps,
            min_excess_prob: best.iter().map(|b| b.0.min(1.0)).collect(),
            argmin_map: best.iter().map(|b| b.1).collect(),
            min_avg_distortion: best_avg,
        });
    }
    Ok(EnumerationReport {
        d_grid: d_grid.to_vec(),
        per_n,
    })
}
