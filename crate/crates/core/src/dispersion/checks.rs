use std::collections::BTreeMap;

use serde::Serialize;

use super::joint::InducedJoint;
use super::report::DispersionReport;
use crate::error::{Error, Result};
use crate::instance::{build_algorithm_kernel, Budget, CanonicalDataset, Problem};
use crate::prob::{conditional_mutual_information, mutual_information, JointTable};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MiIdentity {
    pub i_uh: f64,
    pub i_ut: f64,
    pub i_ut_given_h: f64,
    pub i_th: f64,
    pub i_th_given_u: f64,
    /// `|I(U;H) - (I(U;T) - I(U;T|H))|`.
    pub residual_1: f64,
    /// `|I(U;H) - (I(T;H) - I(T;H|U))|`.
    pub residual_2: f64,
}

/// Both chain-rule identities for a table with axes `U`, `T`, `H`
/// (other axes are marginalized out).
pub fn mi_identity_check(table: &JointTable) -> Result<MiIdentity> {
    let i_uh = mutual_information(table, "U", "H")?;
    let i_ut = mutual_information(table, "U", "T")?;
    let i_ut_given_h = conditional_mutual_information(table, "U", "T", "H")?;
    let i_th = mutual_information(table, "T", "H")?;
    let i_th_given_u = conditional_mutual_information(table, "T", "H", "U")?;
    Ok(MiIdentity {
        i_uh,
        i_ut,
        i_ut_given_h,
        i_th,
        i_th_given_u,
        residual_1: (i_uh - (i_ut - i_ut_given_h)).abs(),
        residual_2: (i_uh - (i_th - i_th_given_u)).abs(),
    })
}

/// Max over atoms of `|iota_{U;H} - (iota_{T;H}^A + Delta)|` with
/// `iota_{T;H}^A = ln P^A(h|t)/P_H(h)` and `Delta = ln P_{H|U}(h|u)/P^A(h|t)`.
pub fn iota_split_check(joint: &InducedJoint) -> f64 {
    joint
        .atoms
        .iter()
        .map(|a| {
            let pa = joint.p_h_given_t[a.t][a.h];
            let iota_th = (pa / joint.p_h[a.h]).ln();
            let delta = (joint.p_h_given_u[a.u][a.h] / pa).ln();
            (joint.iota_uh(a.u, a.h) - (iota_th + delta)).abs()
        })
        .fold(0.0, f64::max)
}

/// Information quantities of the same learner fed `k` i.i.d. labelled samples.
#[derive(Debug, Clone, Serialize)]
pub struct IidCounterpart {
    pub k: usize,
    pub n_datasets: usize,
    /// `I(T;H)` under the i.i.d. dataset law.
    pub i_th: f64,
    /// `Var(iota_{T;H}(T;H))`.
    pub var_iota_th: f64,
    pub i_wk_h: f64,
    /// `I(W^k;H|T)`, zero for a learner that only sees `T`.
    pub markov_residual: f64,
    pub reference_rate: Option<f64>,
    pub reference_v_in_iota: Option<f64>,
}

impl IidCounterpart {
    pub fn with_reference(mut self, report: &DispersionReport) -> Self {
        self.reference_rate = Some(report.mutual_information);
        let t = &report.v_in_terms;
        self.reference_v_in_iota = Some(t.v_in_u_iota + t.v_in_s_iota + t.v_in_a_iota);
        self
    }
}

/// Enumerate `(W^k, T)` with `T` the multiset of `k` samples drawn i.i.d.
/// given each letter, and push through the learner.
pub fn iid_counterpart_report(problem: &Problem, k: usize, budget: Budget) -> Result<IidCounterpart> {
    if k == 0 {
        return Err(Error::Domain("k must be positive".into()));
    }
    let ns = problem.n_samples();
    let nw = problem.n_w;
    let cells = crate::instance::checked_pow(nw * ns, k);
    budget.check("i.i.d. letter sequences", cells)?;

    // Mass over (w-sequence index, dataset).
    let mut mass: BTreeMap<(usize, CanonicalDataset), f64> = BTreeMap::new();
    let mut digits = vec![0usize; k];
    loop {
        let mut p = 1.0;
        let mut widx = 0;
        let mut samples = Vec::with_capacity(k);
        for &d in &digits {
            let (w, s) = (d / ns, d % ns);
            p *= problem.p_w.get(w) * problem.sample_mass(w, s);
            widx = widx * nw + w;
            samples.push(s);
        }
        if p > 0.0 {
            *mass.entry((widx, CanonicalDataset::new(samples))).or_insert(0.0) += p;
        }
        let mut i = k;
        loop {
            if i == 0 {
                break;
            }
            i -= 1;
            digits[i] += 1;
            if digits[i] < nw * ns {
                break;
            }
            digits[i] = 0;
        }
        if digits.iter().all(|&d| d == 0) {
            break;
        }
    }
    let mut datasets: Vec<CanonicalDataset> = mass.keys().map(|(_, t)| t.clone()).collect();
    datasets.sort_by(|a, b| a.samples().cmp(b.samples()));
    datasets.dedup();
    let algo = build_algorithm_kernel(problem, &datasets)?;
    let t_index: BTreeMap<&CanonicalDataset, usize> = datasets.iter().enumerate().map(|(i, t)| (t, i)).collect();

    let nwk = nw.pow(k as u32);
    let atoms = mass.iter().flat_map(|((wi, t), &p)| {
        let ti = t_index[t];
        algo.row(ti)
            .iter()
            .enumerate()
            .filter(|(_, &a)| a > 0.0)
            .map(move |(h, &a)| (vec![*wi, ti, h], p * a))
            .collect::<Vec<_>>()
    });
    let table = JointTable::from_atoms(vec![("W", nwk), ("T", datasets.len()), ("H", problem.n_h)], atoms)?;
    let i_th = mutual_information(&table, "T", "H")?;
    let i_wk_h = mutual_information(&table, "W", "H")?;
    let markov = conditional_mutual_information(&table, "W", "H", "T")?;

    // Variance of the density under the (T, H) marginal.
    let th = table.marginal(&["T", "H"])?;
    let p_t = th.marginal_vec("T")?;
    let p_h = th.marginal_vec("H")?;
    let var = th
        .atoms()
        .map(|(idx, p)| {
            let iota = (p / (p_t[idx[0]] * p_h[idx[1]])).ln();
            p * (iota - i_th).powi(2)
        })
        .sum::<f64>();
    Ok(IidCounterpart {
        k,
        n_datasets: datasets.len(),
        i_th,
        var_iota_th: var.max(0.0),
        i_wk_h,
        markov_residual: markov.abs(),
        reference_rate: None,
        reference_v_in_iota: None,
    })
}
