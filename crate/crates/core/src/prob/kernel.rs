use serde::{Deserialize, Serialize};

use super::{normalize_weights, FiniteDist, JointTable};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Row-stochastic matrix: row `i` is the output distribution given input `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StochKernel<T = f64> {
    n_in: usize,
    n_out: usize,
    data: Vec<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    row_labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    col_labels: Option<Vec<String>>,
}

impl<T: Real> StochKernel<T> {
    pub fn new(rows: Vec<Vec<T>>) -> Result<Self> {
        Self::named("kernel", rows)
    }

    pub fn named(name: &str, rows: Vec<Vec<T>>) -> Result<Self> {
        let n_in = rows.len();
        if n_in == 0 {
            return Err(Error::Distribution {
                name: name.to_string(),
                message: "kernel has no rows".into(),
            });
        }
        let n_out = rows[0].len();
        let mut data = Vec::with_capacity(n_in * n_out);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n_out {
                return Err(Error::Alphabet(format!(
                    "{name}: row {i} has {} entries, expected {n_out}",
                    row.len()
                )));
            }
            data.extend(normalize_weights(&format!("{name}[{i}]"), row)?);
        }
        Ok(StochKernel {
            n_in,
            n_out,
            data,
            row_labels: None,
            col_labels: None,
        })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![T::zero(); n * n];
        for i in 0..n {
            data[i * n + i] = T::one();
        }
        StochKernel {
            n_in: n,
            n_out: n,
            data,
            row_labels: None,
            col_labels: None,
        }
    }

    pub fn with_labels(mut self, rows: Option<Vec<String>>, cols: Option<Vec<String>>) -> Result<Self> {
        if rows.as_ref().is_some_and(|r| r.len() != self.n_in) || cols.as_ref().is_some_and(|c| c.len() != self.n_out) {
            return Err(Error::Alphabet("label count does not match kernel shape".into()));
        }
        self.row_labels = rows;
        self.col_labels = cols;
        Ok(self)
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn n_out(&self) -> usize {
        self.n_out
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n_out..(i + 1) * self.n_out]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks(self.n_out.max(1))
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n_out + j]
    }

    pub fn row_dist(&self, i: usize) -> FiniteDist<T> {
        FiniteDist::new(self.row(i).to_vec()).expect("kernel rows are stochastic")
    }

    pub fn row_labels(&self) -> Option<&[String]> {
        self.row_labels.as_deref()
    }

    pub fn col_labels(&self) -> Option<&[String]> {
        self.col_labels.as_deref()
    }

    /// Output marginal `sum_i prior(i) K(i, .)`.
    pub fn push_forward(&self, prior: &FiniteDist<T>) -> Result<FiniteDist<T>> {
        if prior.len() != self.n_in {
            return Err(Error::Alphabet(format!(
                "prior over {} symbols, kernel input has {}",
                prior.len(),
                self.n_in
            )));
        }
        let mut out = vec![T::zero(); self.n_out];
        for i in prior.support() {
            let p = prior.get(i);
            for (o, k) in out.iter_mut().zip(self.row(i)) {
                *o = *o + p * *k;
            }
        }
        FiniteDist::new(out)
    }

    /// Kernel composition `self` then `next`.
    pub fn compose(&self, next: &StochKernel<T>) -> Result<StochKernel<T>> {
        if self.n_out != next.n_in {
            return Err(Error::Alphabet(format!(
                "cannot compose {}x{} with {}x{}",
                self.n_in, self.n_out, next.n_in, next.n_out
            )));
        }
        let rows = (0..self.n_in)
            .map(|i| {
                let mut out = vec![T::zero(); next.n_out];
                for (j, a) in self.row(i).iter().enumerate() {
                    if *a > T::zero() {
                        for (o, b) in out.iter_mut().zip(next.row(j)) {
                            *o = *o + *a * *b;
                        }
                    }
                }
                out
            })
            .collect();
        StochKernel::new(rows)
    }

    /// Joint table `prior(i) K(j | i)` with axes (`in_axis`, `out_axis`).
    pub fn joint(&self, prior: &FiniteDist<T>, in_axis: &str, out_axis: &str) -> Result<JointTable<T>> {
        if prior.len() != self.n_in {
            return Err(Error::Alphabet("prior does not match kernel input".into()));
        }
        let mut mass = Vec::with_capacity(self.n_in * self.n_out);
        for i in 0..self.n_in {
            let p = prior.get(i);
            mass.extend(self.row(i).iter().map(|k| p * *k));
        }
        JointTable::new(vec![(in_axis, self.n_in), (out_axis, self.n_out)], mass)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_are_validated() {
        assert!(StochKernel::new(vec![vec![0.5, 0.5], vec![0.9, 0.2]]).is_err());
        assert!(StochKernel::new(vec![vec![0.5, 0.5], vec![1.0]]).is_err());
        let k = StochKernel::new(vec![vec![0.5, 0.5], vec![0.1, 0.9]]).unwrap();
        assert_eq!(k.row(1), &[0.1, 0.9]);
    }

    #[test]
    fn push_forward_and_compose() {
        let k = StochKernel::new(vec![vec![0.8f64, 0.2], vec![0.2, 0.8]]).unwrap();
        let p = k.push_forward(&FiniteDist::uniform(2)).unwrap();
        assert!((p.get(0) - 0.5).abs() < 1e-15);
        let kk = k.compose(&k).unwrap();
        assert!((kk.get(0, 0) - 0.68).abs() < 1e-15);
        let id = StochKernel::identity(2);
        assert_eq!(k.compose(&id).unwrap(), k);
    }
}
