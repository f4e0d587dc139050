use serde::{Deserialize, Serialize};

use super::normalize_weights;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub size: usize,
}

/// Dense joint probability table over named finite axes, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointTable<T = f64> {
    axes: Vec<Axis>,
    mass: Vec<T>,
}

impl<T: Real> JointTable<T> {
    pub fn new<S: AsRef<str>>(axes: Vec<(S, usize)>, mass: Vec<T>) -> Result<Self> {
        let axes: Vec<Axis> = axes
            .into_iter()
            .map(|(n, s)| Axis {
                name: n.as_ref().to_string(),
                size: s,
            })
            .collect();
        for (i, a) in axes.iter().enumerate() {
            if a.size == 0 {
                return Err(Error::Alphabet(format!("axis `{}` is empty", a.name)));
            }
            if axes[..i].iter().any(|b| b.name == a.name) {
                return Err(Error::Alphabet(format!("duplicate axis `{}`", a.name)));
            }
        }
        let cells: usize = axes.iter().map(|a| a.size).product();
        if cells != mass.len() {
            return Err(Error::Alphabet(format!(
                "{} cells for axes of total size {cells}",
                mass.len()
            )));
        }
        let mass = normalize_weights("joint table", mass)?;
        Ok(JointTable { axes, mass })
    }

    /// Build from a sparse list of (multi-index, mass) atoms; repeated
    /// indices accumulate.
    pub fn from_atoms<S: AsRef<str>>(axes: Vec<(S, usize)>, atoms: impl IntoIterator<Item = (Vec<usize>, T)>) -> Result<Self> {
        let sizes: Vec<usize> = axes.iter().map(|(_, s)| *s).collect();
        let mut mass = vec![T::zero(); sizes.iter().product()];
        for (idx, p) in atoms {
            let flat = flat_index(&sizes, &idx)?;
            mass[flat] = mass[flat] + p;
        }
        Self::new(axes, mass)
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn mass(&self) -> &[T] {
        &self.mass
    }

    pub fn axis(&self, name: &str) -> Result<usize> {
        self.axes
            .iter()
            .position(|a| a.name == name)
            .ok_or_else(|| Error::Axis(name.to_string()))
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.size).collect()
    }

    pub fn get(&self, idx: &[usize]) -> Result<T> {
        Ok(self.mass[flat_index(&self.sizes(), idx)?])
    }

    /// Iterate `(multi-index, mass)` over cells with positive mass.
    pub fn atoms(&self) -> impl Iterator<Item = (Vec<usize>, T)> + '_ {
        let sizes = self.sizes();
        self.mass.iter().enumerate().filter(|(_, p)| **p > T::zero()).map(move |(flat, p)| {
            let mut idx = vec![0; sizes.len()];
            let mut rem = flat;
            for d in (0..sizes.len()).rev() {
                idx[d] = rem % sizes[d];
                rem /= sizes[d];
            }
            (idx, *p)
        })
    }

    /// Marginal over the named axes, in the order given.
    pub fn marginal(&self, names: &[&str]) -> Result<JointTable<T>> {
        let keep: Vec<usize> = names.iter().map(|n| self.axis(n)).collect::<Result<_>>()?;
        for (i, k) in keep.iter().enumerate() {
            if keep[..i].contains(k) {
                return Err(Error::Alphabet(format!("axis `{}` requested twice", names[i])));
            }
        }
        let sizes: Vec<usize> = keep.iter().map(|&k| self.axes[k].size).collect();
        let mut mass = vec![T::zero(); sizes.iter().product()];
        for (idx, p) in self.atoms() {
            let sub: Vec<usize> = keep.iter().map(|&k| idx[k]).collect();
            let flat = flat_index(&sizes, &sub)?;
            mass[flat] = mass[flat] + p;
        }
        let axes = keep.iter().map(|&k| (self.axes[k].name.as_str(), self.axes[k].size)).collect();
        JointTable::new(axes, mass)
    }

    /// One-dimensional marginal as a plain vector.
    pub fn marginal_vec(&self, name: &str) -> Result<Vec<T>> {
        Ok(self.marginal(&[name])?.mass)
    }
}

pub(crate) fn flat_index(sizes: &[usize], idx: &[usize]) -> Result<usize> {
    if sizes.len() != idx.len() {
        return Err(Error::Alphabet(format!(
            "index of rank {} for table of rank {}",
            idx.len(),
            sizes.len()
        )));
    }
    let mut flat = 0;
    for (i, (&s, &x)) in sizes.iter().zip(idx).enumerate() {
        if x >= s {
            return Err(Error::Alphabet(format!("index {x} out of range on axis {i}")));
        }
        flat = flat * s + x;
    }
    Ok(flat)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn marginals_reorder_and_sum() {
        let j = JointTable::new(vec![("a", 2), ("b", 3)], vec![0.1f64, 0.2, 0.0, 0.3, 0.1, 0.3]).unwrap();
        let b = j.marginal_vec("b").unwrap();
        assert!((b[0] - 0.4).abs() < 1e-15 && (b[2] - 0.3).abs() < 1e-15);
        let ba = j.marginal(&["b", "a"]).unwrap();
        assert_eq!(ba.get(&[1, 0]).unwrap(), 0.2);
        assert!(matches!(j.marginal(&["c"]), Err(Error::Axis(_))));
        assert_eq!(j.atoms().count(), 5);
    }

    #[test]
    fn rejects_malformed_tables() {
        assert!(JointTable::new(vec![("a", 2)], vec![0.5, 0.4]).is_err());
        assert!(JointTable::new(vec![("a", 2), ("a", 1)], vec![0.5, 0.5]).is_err());
        assert!(JointTable::new(vec![("a", 3)], vec![0.5, 0.5]).is_err());
    }
}
