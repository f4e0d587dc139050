use serde::{Deserialize, Serialize};

use super::normalize_weights;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// A probability vector over a finite alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteDist<T = f64> {
    weights: Vec<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

impl<T: Real> FiniteDist<T> {
    pub fn new(weights: Vec<T>) -> Result<Self> {
        Self::named("distribution", weights)
    }

    /// Like [`FiniteDist::new`], but errors mention `name`.
    pub fn named(name: &str, weights: Vec<T>) -> Result<Self> {
        Ok(FiniteDist {
            weights: normalize_weights(name, weights)?,
            labels: None,
        })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.weights.len() {
            return Err(Error::Alphabet(format!(
                "{} labels for {} weights",
                labels.len(),
                self.weights.len()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn uniform(n: usize) -> Self {
        let w = T::one() / T::from_usize(n).unwrap();
        FiniteDist {
            weights: vec![w; n],
            labels: None,
        }
    }

    pub fn point(n: usize, at: usize) -> Self {
        let mut weights = vec![T::zero(); n];
        weights[at] = T::one();
        FiniteDist { weights, labels: None }
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn get(&self, i: usize) -> T {
        self.weights[i]
    }

    /// Indices with positive mass.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > T::zero())
            .map(|(i, _)| i)
    }

    pub fn expect<F: Fn(usize) -> T>(&self, f: F) -> T {
        self.support().map(|i| self.weights[i] * f(i)).sum()
    }

    pub fn into_weights(self) -> Vec<T> {
        self.weights
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_exact_and_renormalizes_drift() {
        let d = FiniteDist::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(d.weights(), &[0.5, 0.5]);
        let d = FiniteDist::new(vec![0.5, 0.5 + 5e-11]).unwrap();
        let s: f64 = d.weights().iter().sum();
        assert!((s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_sums_and_negatives() {
        assert!(FiniteDist::new(vec![0.5, 0.4]).is_err());
        assert!(FiniteDist::new(vec![1.5, -0.5]).is_err());
        assert!(FiniteDist::<f64>::new(vec![]).is_err());
        let err = FiniteDist::named("p_w", vec![0.6, 0.3]).unwrap_err();
        assert!(err.to_string().contains("p_w"));
    }

    #[test]
    fn f32_uses_looser_tolerance() {
        let d = FiniteDist::<f32>::new(vec![0.1, 0.2, 0.7]).unwrap();
        assert_eq!(d.len(), 3);
    }

    #[test]
    fn support_and_labels() {
        let d = FiniteDist::new(vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(d.support().collect::<Vec<_>>(), vec![1]);
        assert!(d.clone().with_labels(vec!["a".into()]).is_err());
        let d = d.with_labels(vec!["a".into(), "b".into(), "c".into()]).unwrap();
        assert_eq!(d.labels().unwrap()[1], "b");
    }
}
