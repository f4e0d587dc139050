use std::collections::{BTreeMap, HashMap};

use super::pool::{Budget, PoolSpace};
use super::problem::{CanonicalDataset, Problem};
use super::spec::SelectionMode;
use crate::error::{Error, Result};

/// Index subsets of a pool (or concatenated pool tuple) and the distinct
/// datasets they induce.
#[derive(Debug, Clone, PartialEq)]
pub struct Selections {
    pub subsets: Vec<(Vec<usize>, CanonicalDataset)>,
    /// Distinct datasets with the number of index subsets mapping to each.
    pub datasets: Vec<(CanonicalDataset, usize)>,
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// Number of index subsets a selection may choose from a pool of `len` samples.
pub fn subset_count(mode: SelectionMode, len: usize, n: Option<usize>) -> Result<u128> {
    match mode {
        SelectionMode::FixedN => {
            let n = n.ok_or_else(|| Error::validation("n", None, "fixed-n selection needs n"))?;
            if n > len {
                return Err(Error::validation("n", None, format!("n = {n} exceeds the {len} pooled samples")));
            }
            Ok(binomial(len, n))
        }
        SelectionMode::AnySubset => Ok(if len >= 127 { u128::MAX } else { 1u128 << len }),
    }
}

/// Enumerate every allowed index subset of `samples`; fixed-n uses exactly
/// `n` indices, any-subset uses all subsets including the empty one.
pub fn feasible_selections(
    mode: SelectionMode,
    n: Option<usize>,
    samples: &[usize],
    budget: Budget,
) -> Result<Selections> {
    let len = samples.len();
    budget.check("index subsets", subset_count(mode, len, n)?)?;
    let mut subsets = Vec::new();
    match mode {
        SelectionMode::FixedN => {
            let n = n.unwrap_or(0);
            let mut idx: Vec<usize> = (0..n).collect();
            loop {
                let ds = CanonicalDataset::new(idx.iter().map(|&i| samples[i]).collect());
                subsets.push((idx.clone(), ds));
                // Next combination in lexicographic order.
                let mut i = n;
                loop {
                    if i == 0 {
                        return Ok(collect(subsets));
                    }
                    i -= 1;
                    if idx[i] < len - n + i {
                        break;
                    }
                }
                idx[i] += 1;
                for j in i + 1..n {
                    idx[j] = idx[j - 1] + 1;
                }
            }
        }
        SelectionMode::AnySubset => {
            let mut all: Vec<Vec<usize>> = (0u64..1 << len)
                .map(|mask| (0..len).filter(|i| mask >> i & 1 == 1).collect())
                .collect();
            all.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
            for idx in all {
                let ds = CanonicalDataset::new(idx.iter().map(|&i| samples[i]).collect());
                subsets.push((idx, ds));
            }
            Ok(collect(subsets))
        }
    }
}

fn collect(subsets: Vec<(Vec<usize>, CanonicalDataset)>) -> Selections {
    let mut counts: BTreeMap<&CanonicalDataset, usize> = BTreeMap::new();
    for (_, d) in &subsets {
        *counts.entry(d).or_default() += 1;
    }
    let datasets = counts.into_iter().map(|(d, c)| (d.clone(), c)).collect();
    Selections { subsets, datasets }
}

/// One dataset a pool can be reduced to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Choice {
    /// Index into [`SelectionSpace::datasets`].
    pub dataset: usize,
    pub multiplicity: usize,
}

/// Feasible datasets for every pool, sharing one global dataset registry.
#[derive(Debug, Clone)]
pub struct SelectionSpace {
    /// Ordered by size, then lexicographically.
    pub datasets: Vec<CanonicalDataset>,
    /// Per pool, its feasible datasets in registry order.
    pub per_pool: Vec<Vec<Choice>>,
    /// Index subsets per pool, `C(m, n)` or `2^m`.
    pub subsets_per_pool: u128,
    index: HashMap<CanonicalDataset, usize>,
}

impl SelectionSpace {
    pub fn build(p: &Problem, pools: &PoolSpace, n: Option<usize>, budget: Budget) -> Result<SelectionSpace> {
        let per: Vec<Selections> = pools
            .pools
            .iter()
            .map(|u| feasible_selections(p.selection_mode, n, u, budget))
            .collect::<Result<_>>()?;
        let mut all: Vec<CanonicalDataset> = per.iter().flat_map(|s| s.datasets.iter().map(|(d, _)| d.clone())).collect();
        all.sort_by(|a, b| a.size().cmp(&b.size()).then_with(|| a.cmp(b)));
        all.dedup();
        let index: HashMap<CanonicalDataset, usize> = all.iter().enumerate().map(|(i, d)| (d.clone(), i)).collect();
        let per_pool = per
            .iter()
            .map(|s| {
                let mut c: Vec<Choice> = s
                    .datasets
                    .iter()
                    .map(|(d, mult)| Choice {
                        dataset: index[d],
                        multiplicity: *mult,
                    })
                    .collect();
                c.sort_by_key(|c| c.dataset);
                c
            })
            .collect();
        Ok(SelectionSpace {
            datasets: all,
            per_pool,
            subsets_per_pool: subset_count(p.selection_mode, p.m, n)?,
            index,
        })
    }

    pub fn dataset_index(&self, d: &CanonicalDataset) -> Option<usize> {
        self.index.get(d).copied()
    }
}
