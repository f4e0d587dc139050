use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::Model;
use crate::prob::{JointTable, StochKernel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Atom {
    pub w: usize,
    /// Pool index in the pool support.
    pub u: usize,
    /// Dataset index in the selection registry.
    pub t: usize,
    pub h: usize,
    pub p: f64,
}

/// Exact joint `P_W P_{U|W} S(T|U) A(H|T)` on its positive atoms.
#[derive(Debug, Clone, Serialize)]
pub struct InducedJoint {
    pub atoms: Vec<Atom>,
    pub n_w: usize,
    pub n_u: usize,
    pub n_t: usize,
    pub n_h: usize,
    pub p_w: Vec<f64>,
    pub p_h: Vec<f64>,
    /// `p_h_given_u[u][h]`.
    pub p_h_given_u: Vec<Vec<f64>>,
    /// `p_h_given_w[w][h]`.
    pub p_h_given_w: Vec<Vec<f64>>,
    /// Learner rows, `p_h_given_t[t][h]`.
    pub p_h_given_t: Vec<Vec<f64>>,
    /// `distortion[w][h]`.
    pub distortion: Vec<Vec<f64>>,
    pub avg_distortion: f64,
}

/// Build the joint for a selection kernel over the model's dataset registry.
pub fn induced_joint(model: &Model, selection: &StochKernel) -> Result<InducedJoint> {
    let (n_u, n_t, n_h, n_w) = (
        model.n_pools(),
        model.selections.datasets.len(),
        model.problem.n_h,
        model.problem.n_w,
    );
    if selection.n_in() != n_u || selection.n_out() != n_t {
        return Err(Error::Alphabet(format!(
            "selection kernel is {}x{}, model needs {n_u}x{n_t}",
            selection.n_in(),
            selection.n_out()
        )));
    }
    for u in 0..n_u {
        for (t, &s) in selection.row(u).iter().enumerate() {
            if s > 0.0 && !model.choices(u).iter().any(|c| c.dataset == t) {
                return Err(Error::Support(format!("pool {u} cannot select dataset {t}")));
            }
        }
    }
    let p_w: Vec<f64> = model.problem.p_w.weights().to_vec();
    let mut atoms = Vec::new();
    for w in 0..n_w {
        for u in 0..n_u {
            let pwu = p_w[w] * model.pools.p_u_given_w.get(w, u);
            if pwu <= 0.0 {
                continue;
            }
            for c in model.choices(u) {
                let pt = pwu * selection.get(u, c.dataset);
                if pt <= 0.0 {
                    continue;
                }
                for h in 0..n_h {
                    let p = pt * model.algo.get(c.dataset, h);
                    if p > 0.0 {
                        atoms.push(Atom { w, u, t: c.dataset, h, p });
                    }
                }
            }
        }
    }
    let total: f64 = atoms.iter().map(|a| a.p).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Distribution {
            name: "induced joint".into(),
            message: format!("atoms sum to {total}"),
        });
    }
    let mut p_h = vec![0.0; n_h];
    let mut p_u = vec![0.0; n_u];
    let mut p_h_given_u = vec![vec![0.0; n_h]; n_u];
    let mut p_h_given_w = vec![vec![0.0; n_h]; n_w];
    let mut avg = 0.0;
    for a in &atoms {
        p_h[a.h] += a.p;
        p_u[a.u] += a.p;
        p_h_given_u[a.u][a.h] += a.p;
        p_h_given_w[a.w][a.h] += a.p;
        avg += a.p * model.problem.distortion[a.w][a.h];
    }
    for (row, pu) in p_h_given_u.iter_mut().zip(&p_u) {
        row.iter_mut().for_each(|v| *v /= pu);
    }
    for (row, pw) in p_h_given_w.iter_mut().zip(&p_w) {
        row.iter_mut().for_each(|v| *v /= pw);
    }
    Ok(InducedJoint {
        atoms,
        n_w,
        n_u,
        n_t,
        n_h,
        p_w,
        p_h,
        p_h_given_u,
        p_h_given_w,
        p_h_given_t: (0..n_t).map(|t| model.algo.row(t).to_vec()).collect(),
        distortion: model.problem.distortion.clone(),
        avg_distortion: avg,
    })
}

impl InducedJoint {
    /// `ln P_{H|U}(h|u) / P_H(h)`.
    pub fn iota_uh(&self, u: usize, h: usize) -> f64 {
        (self.p_h_given_u[u][h] / self.p_h[h]).ln()
    }

    /// `ln P_{H|W}(h|w) / P_H(h)`.
    pub fn iota_wh(&self, w: usize, h: usize) -> f64 {
        (self.p_h_given_w[w][h] / self.p_h[h]).ln()
    }

    /// `I(U;H)` from the atoms.
    pub fn rate(&self) -> f64 {
        self.atoms.iter().map(|a| a.p * self.iota_uh(a.u, a.h)).sum()
    }

    /// Dense `(W, U, T, H)` table for the generic information functions.
    pub fn table(&self) -> Result<JointTable> {
        let atoms = self.atoms.iter().map(|a| (vec![a.w, a.u, a.t, a.h], a.p));
        JointTable::from_atoms(vec![("W", self.n_w), ("U", self.n_u), ("T", self.n_t), ("H", self.n_h)], atoms)
    }
}
