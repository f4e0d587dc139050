use std::collections::HashMap;

use super::problem::{checked_pow, Problem};
use crate::error::{Error, Result};
use crate::prob::{posterior_kernel, FiniteDist, StochKernel};

/// Enumeration budget for exhaustive constructions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget(pub u128);

impl Budget {
    pub const POOLS: Budget = Budget(1_000_000);
    pub const MAPS: Budget = Budget(10_000_000);

    pub fn check(self, what: &str, required: u128) -> Result<()> {
        if required > self.0 {
            Err(Error::Budget {
                what: what.to_string(),
                required,
                budget: self.0,
            })
        } else {
            Ok(())
        }
    }
}

impl Default for Budget {
    fn default() -> Self {
        Budget::POOLS
    }
}

/// All positive-mass ordered pools with their exact likelihoods and posteriors.
#[derive(Debug, Clone)]
pub struct PoolSpace {
    /// Pools as ordered tuples of sample indices, lexicographic.
    pub pools: Vec<Vec<usize>>,
    pub p_u_given_w: StochKernel,
    pub p_u: FiniteDist,
    pub p_w_given_u: StochKernel,
    index: HashMap<Vec<usize>, usize>,
}

impl PoolSpace {
    pub fn len(&self) -> usize {
        self.pools.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pools.is_empty()
    }

    pub fn index_of(&self, pool: &[usize]) -> Option<usize> {
        self.index.get(pool).copied()
    }
}

pub fn enumerate_pool_space(p: &Problem, budget: Budget) -> Result<PoolSpace> {
    budget.check("ordered pools per w", checked_pow(p.n_samples(), p.m))?;
    // Samples that no w can produce only ever lead to zero-mass pools.
    let live: Vec<usize> = (0..p.n_samples())
        .filter(|&s| (0..p.n_w).any(|w| p.sample_mass(w, s) > 0.0))
        .collect();
    let mut pools = Vec::new();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    let mut digits = vec![0usize; p.m];
    'outer: loop {
        let pool: Vec<usize> = digits.iter().map(|&d| live[d]).collect();
        let masses: Vec<f64> = (0..p.n_w)
            .map(|w| pool.iter().map(|&s| p.sample_mass(w, s)).product())
            .collect();
        if masses.iter().any(|&m| m > 0.0) {
            pools.push(pool);
            cols.push(masses);
        }
        for i in (0..p.m).rev() {
            digits[i] += 1;
            if digits[i] < live.len() {
                continue 'outer;
            }
            digits[i] = 0;
        }
        break;
    }
    let rows: Vec<Vec<f64>> = (0..p.n_w).map(|w| cols.iter().map(|c| c[w]).collect()).collect();
    let p_u_given_w = StochKernel::named("p_u_given_w", rows)?;
    let post = posterior_kernel(&p_u_given_w, &p.p_w)?;
    let p_u = p_u_given_w.push_forward(&p.p_w)?;
    finish(pools, p_u_given_w, p_u, post.kernel)
}

fn finish(pools: Vec<Vec<usize>>, p_u_given_w: StochKernel, p_u: FiniteDist, p_w_given_u: StochKernel) -> Result<PoolSpace> {
    let index = pools.iter().enumerate().map(|(i, u)| (u.clone(), i)).collect();
    Ok(PoolSpace {
        pools,
        p_u_given_w,
        p_u,
        p_w_given_u,
        index,
    })
}

/// `E[d(W; h) | U = u]` under the pool posterior.
pub fn posterior_distortion(p: &Problem, space: &PoolSpace, u: usize, h: usize) -> Result<f64> {
    if u >= space.len() {
        return Err(Error::Support(format!("pool {u} is outside the pool support")));
    }
    Ok((0..p.n_w).map(|w| space.p_w_given_u.get(u, w) * p.distortion[w][h]).sum())
}
