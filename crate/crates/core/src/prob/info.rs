use super::{FiniteDist, JointTable, StochKernel};
use crate::error::{Error, Result};
use crate::scalar::{plogpq, Real};

/// A set of axis names: a single name or several.
pub trait AxisSet {
    fn names(&self) -> Vec<&str>;
}

impl AxisSet for &str {
    fn names(&self) -> Vec<&str> {
        vec![self]
    }
}

impl AxisSet for &[&str] {
    fn names(&self) -> Vec<&str> {
        self.to_vec()
    }
}

impl<const N: usize> AxisSet for [&str; N] {
    fn names(&self) -> Vec<&str> {
        self.to_vec()
    }
}

pub fn kl_divergence<T: Real>(p: &FiniteDist<T>, q: &FiniteDist<T>) -> Result<T> {
    kl_slices(p.weights(), q.weights())
}

pub(crate) fn kl_slices<T: Real>(p: &[T], q: &[T]) -> Result<T> {
    if p.len() != q.len() {
        return Err(Error::Alphabet(format!("KL between lengths {} and {}", p.len(), q.len())));
    }
    let mut acc = T::zero();
    for (&a, &b) in p.iter().zip(q) {
        acc = acc + plogpq(a, b);
    }
    // Float noise between nearly equal arguments can go slightly negative.
    Ok(acc.max(T::zero()))
}

pub fn entropy<T: Real>(p: &FiniteDist<T>) -> T {
    p.weights()
        .iter()
        .filter(|w| **w > T::zero())
        .map(|&w| -w * w.ln())
        .sum()
}

fn disjoint(groups: &[&[&str]]) -> Result<()> {
    let all: Vec<&str> = groups.iter().flat_map(|g| g.iter().copied()).collect();
    for (i, a) in all.iter().enumerate() {
        if all[..i].contains(a) {
            return Err(Error::Alphabet(format!("axis `{a}` used twice")));
        }
    }
    Ok(())
}

/// Marginal over `a ++ b` with group sizes so it can be reshaped as a matrix.
fn grouped<T: Real>(joint: &JointTable<T>, groups: &[&[&str]]) -> Result<(Vec<usize>, Vec<T>)> {
    disjoint(groups)?;
    let names: Vec<&str> = groups.iter().flat_map(|g| g.iter().copied()).collect();
    let m = joint.marginal(&names)?;
    let sizes = groups
        .iter()
        .map(|g| g.iter().map(|n| joint.axes()[joint.axis(n).unwrap()].size).product())
        .collect();
    Ok((sizes, m.mass().to_vec()))
}

/// I(A;B) in nats; other axes are summed out.
pub fn mutual_information<T: Real, A: AxisSet, B: AxisSet>(joint: &JointTable<T>, a: A, b: B) -> Result<T> {
    let (a, b) = (a.names(), b.names());
    let (sizes, mass) = grouped(joint, &[&a, &b])?;
    let (na, nb) = (sizes[0], sizes[1]);
    let pa: Vec<T> = (0..na).map(|i| mass[i * nb..(i + 1) * nb].iter().copied().sum()).collect();
    let pb: Vec<T> = (0..nb).map(|j| (0..na).map(|i| mass[i * nb + j]).sum()).collect();
    let mut acc = T::zero();
    for i in 0..na {
        for j in 0..nb {
            let p = mass[i * nb + j];
            if p > T::zero() {
                acc = acc + p * (p / (pa[i] * pb[j])).ln();
            }
        }
    }
    Ok(acc.max(T::zero()))
}

/// I(A;B|C) = sum_c p(c) I(A;B | C=c).
pub fn conditional_mutual_information<T: Real, A: AxisSet, B: AxisSet, C: AxisSet>(
    joint: &JointTable<T>,
    a: A,
    b: B,
    c: C,
) -> Result<T> {
    let (a, b, c) = (a.names(), b.names(), c.names());
    let (sizes, mass) = grouped(joint, &[&c, &a, &b])?;
    let (nc, na, nb) = (sizes[0], sizes[1], sizes[2]);
    let mut acc = T::zero();
    for k in 0..nc {
        let block = &mass[k * na * nb..(k + 1) * na * nb];
        let pc: T = block.iter().copied().sum();
        if pc <= T::zero() {
            continue;
        }
        let pac: Vec<T> = (0..na).map(|i| block[i * nb..(i + 1) * nb].iter().copied().sum()).collect();
        let pbc: Vec<T> = (0..nb).map(|j| (0..na).map(|i| block[i * nb + j]).sum()).collect();
        for i in 0..na {
            for j in 0..nb {
                let p = block[i * nb + j];
                if p > T::zero() {
                    acc = acc + p * (p * pc / (pac[i] * pbc[j])).ln();
                }
            }
        }
    }
    Ok(acc.max(T::zero()))
}

/// ln p(a,b) / (p(a) p(b)) at a positive atom.
pub fn information_density<T: Real>(joint: &JointTable<T>, axis_a: &str, axis_b: &str, a: usize, b: usize) -> Result<T> {
    let ab = joint.marginal(&[axis_a, axis_b])?;
    let pab = ab.get(&[a, b])?;
    if pab <= T::zero() {
        return Err(Error::Support(format!("atom ({a},{b}) of ({axis_a},{axis_b}) has zero mass")));
    }
    let pa = ab.marginal_vec(axis_a)?[a];
    let pb = ab.marginal_vec(axis_b)?[b];
    Ok((pab / (pa * pb)).ln())
}

/// Bayes inversion of a likelihood restricted to the positive-mass outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior<T = f64> {
    /// Output symbols `u` with `P_U(u) > 0`, ascending.
    pub support: Vec<usize>,
    /// `P_U` over `support`.
    pub marginal: FiniteDist<T>,
    /// Row `r` is `P_{W|U = support[r]}`.
    pub kernel: StochKernel<T>,
}

pub fn posterior_kernel<T: Real>(likelihood: &StochKernel<T>, prior: &FiniteDist<T>) -> Result<Posterior<T>> {
    let p_u = likelihood.push_forward(prior)?;
    let support: Vec<usize> = p_u.support().collect();
    let rows = support
        .iter()
        .map(|&u| column_posterior(likelihood, prior, u, p_u.get(u)))
        .collect();
    let marginal = FiniteDist::new(support.iter().map(|&u| p_u.get(u)).collect())?;
    let kernel = StochKernel::named("posterior", rows)?;
    Ok(Posterior {
        support,
        marginal,
        kernel,
    })
}

/// `P_{W|U=u}` for a single output symbol.
pub fn posterior_row<T: Real>(likelihood: &StochKernel<T>, prior: &FiniteDist<T>, u: usize) -> Result<FiniteDist<T>> {
    if prior.len() != likelihood.n_in() || u >= likelihood.n_out() {
        return Err(Error::Alphabet("posterior query outside kernel alphabets".into()));
    }
    let pu: T = (0..prior.len()).map(|w| prior.get(w) * likelihood.get(w, u)).sum();
    if pu <= T::zero() {
        return Err(Error::Support(format!("output {u} has zero marginal mass")));
    }
    FiniteDist::named("posterior", column_posterior(likelihood, prior, u, pu))
}

fn column_posterior<T: Real>(likelihood: &StochKernel<T>, prior: &FiniteDist<T>, u: usize, pu: T) -> Vec<T> {
    let mut row: Vec<T> = (0..prior.len()).map(|w| prior.get(w) * likelihood.get(w, u) / pu).collect();
    let s: T = row.iter().copied().sum();
    for r in &mut row {
        *r = *r / s;
    }
    row
}

#[cfg(test)]
mod tests {
    use super::*;

    fn joint2(mass: Vec<f64>) -> JointTable {
        JointTable::new(vec![("a", 2), ("b", 2)], mass).unwrap()
    }

    #[test]
    fn kl_cases() {
        let u = FiniteDist::uniform(2);
        assert_eq!(kl_divergence(&u, &u).unwrap(), 0.0);
        let p = FiniteDist::new(vec![1.0, 0.0]).unwrap();
        assert!((kl_divergence(&p, &u).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!(kl_divergence(&u, &p).unwrap().is_infinite());
        assert!(matches!(kl_divergence(&u, &FiniteDist::uniform(3)), Err(Error::Alphabet(_))));
    }

    #[test]
    fn mi_of_coupling_and_product() {
        assert!((mutual_information(&joint2(vec![0.5, 0.0, 0.0, 0.5]), "a", "b").unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!(mutual_information(&joint2(vec![0.12, 0.28, 0.18, 0.42]), "a", "b").unwrap().abs() < 1e-15);
        assert!(matches!(mutual_information(&joint2(vec![0.25; 4]), "a", "z"), Err(Error::Axis(_))));
    }

    #[test]
    fn cmi_with_constant_condition_is_mi() {
        let j = JointTable::new(vec![("a", 2), ("c", 1), ("b", 2)], vec![0.4f64, 0.1, 0.2, 0.3]).unwrap();
        let mi = mutual_information(&j, "a", "b").unwrap();
        let cmi = conditional_mutual_information(&j, "a", "b", "c").unwrap();
        assert!((mi - cmi).abs() < 1e-15);
    }

    #[test]
    fn density_rejects_zero_atom() {
        let j = joint2(vec![0.5, 0.0, 0.0, 0.5]);
        assert!((information_density(&j, "a", "b", 1, 1).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!(matches!(information_density(&j, "a", "b", 0, 1), Err(Error::Support(_))));
    }

    #[test]
    fn posterior_drops_dead_outputs() {
        let lik = StochKernel::new(vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]).unwrap();
        let post = posterior_kernel(&lik, &FiniteDist::uniform(2)).unwrap();
        assert_eq!(post.support, vec![0, 1]);
        assert_eq!(post.kernel.row(1), &[0.0, 1.0]);
        assert!(matches!(posterior_row(&lik, &FiniteDist::uniform(2), 2), Err(Error::Support(_))));
    }
}
