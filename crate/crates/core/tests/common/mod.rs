//! Reference implementations shared by integration tests.
#![allow(dead_code)]

use poolrate_core::instance::Model;

/// Classical Blahut-Arimoto over the dataset registry with cost `c(u,t)`.
/// Valid as a reference when each dataset maps to its own hypothesis.
pub fn blahut_arimoto(m: &Model, lambda: f64) -> (f64, f64) {
    let nd = m.selections.datasets.len();
    let mut q = vec![1.0 / nd as f64; nd];
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for _ in 0..200_000 {
        rows = (0..m.n_pools())
            .map(|u| {
                let w: Vec<f64> =
                    m.choices(u).iter().zip(&m.cost[u]).map(|(c, &cost)| q[c.dataset] * (-lambda * cost).exp()).collect();
                let z: f64 = w.iter().sum();
                w.into_iter().map(|v| v / z).collect()
            })
            .collect();
        let mut nq = vec![0.0; nd];
        for u in 0..m.n_pools() {
            for (c, s) in m.choices(u).iter().zip(&rows[u]) {
                nq[c.dataset] += m.pools.p_u.get(u) * s;
            }
        }
        let diff: f64 = nq.iter().zip(&q).map(|(a, b)| (a - b).abs()).sum();
        q = nq;
        if diff < 1e-15 {
            break;
        }
    }
    let mut rate = 0.0;
    let mut dist = 0.0;
    for u in 0..m.n_pools() {
        let pu = m.pools.p_u.get(u);
        for ((c, &s), &cost) in m.choices(u).iter().zip(&rows[u]).zip(&m.cost[u]) {
            if s > 0.0 {
                rate += pu * s * (s / q[c.dataset]).ln();
                dist += pu * s * cost;
            }
        }
    }
    (rate, dist)
}

/// `Var` of `f` under weights `p` by raw moments.
pub fn raw_var(p: &[f64], f: &[f64]) -> f64 {
    let tot: f64 = p.iter().sum();
    let m1: f64 = p.iter().zip(f).map(|(a, b)| a * b).sum::<f64>() / tot;
    let m2: f64 = p.iter().zip(f).map(|(a, b)| a * b * b).sum::<f64>() / tot;
    m2 - m1 * m1
}
