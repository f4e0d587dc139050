use std::fmt;

use serde::{Deserialize, Serialize};

use super::spec::{AlgorithmKind, DistortionMode, HypothesisSpec, LossSpec, ProblemInstance, SelectionMode};
use crate::error::{Error, Result};
use crate::prob::{kl_slices, FiniteDist, StochKernel};

/// A training dataset: sorted multiset of sample indices `x * |Y| + y`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CanonicalDataset {
    samples: Vec<usize>,
}

impl CanonicalDataset {
    pub fn new(mut samples: Vec<usize>) -> Self {
        samples.sort_unstable();
        CanonicalDataset { samples }
    }

    pub fn samples(&self) -> &[usize] {
        &self.samples
    }

    pub fn size(&self) -> usize {
        self.samples.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Algorithm {
    Erm,
    Gibbs { beta: f64 },
    Explicit { rows: Vec<(CanonicalDataset, Vec<f64>)> },
}

/// Index-resolved, validated form of a [`ProblemInstance`].
#[derive(Debug, Clone)]
pub struct Problem {
    pub source: ProblemInstance,
    pub n_w: usize,
    pub n_x: usize,
    pub n_y: usize,
    pub n_h: usize,
    pub p_w: FiniteDist,
    pub p_x_given_w: StochKernel,
    pub p_y_given_x: StochKernel,
    /// Per hypothesis, the predictive kernel X -> Y.
    pub predictors: Vec<StochKernel>,
    pub deterministic: Vec<bool>,
    /// `loss[y][y_hat]`.
    pub loss: Vec<Vec<f64>>,
    pub mode: DistortionMode,
    pub algorithm: Algorithm,
    pub m: usize,
    pub b_bits: f64,
    pub n: Option<usize>,
    pub selection_mode: SelectionMode,
    /// `distortion[w][h]`.
    pub distortion: Vec<Vec<f64>>,
}

fn symbol_index(alphabet: &[String], sym: &str, field: &str, index: usize) -> Result<usize> {
    alphabet
        .iter()
        .position(|s| s == sym)
        .ok_or_else(|| Error::validation(field, Some(index), format!("unknown symbol `{sym}`")))
}

fn check_alphabet(name: &str, a: &[String]) -> Result<()> {
    if a.is_empty() {
        return Err(Error::validation(name, None, "alphabet is empty"));
    }
    for (i, s) in a.iter().enumerate() {
        if a[..i].contains(s) {
            return Err(Error::validation(name, Some(i), format!("duplicate symbol `{s}`")));
        }
    }
    Ok(())
}

fn kernel(name: &str, rows: &[Vec<f64>], n_in: usize, n_out: usize) -> Result<StochKernel> {
    if rows.len() != n_in {
        return Err(Error::validation(name, None, format!("{} rows, expected {n_in}", rows.len())));
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != n_out {
            return Err(Error::validation(name, Some(i), format!("{} entries, expected {n_out}", r.len())));
        }
    }
    StochKernel::named(name, rows.to_vec())
}

impl Problem {
    pub fn compile(inst: &ProblemInstance) -> Result<Problem> {
        check_alphabet("x_alphabet", &inst.x_alphabet)?;
        check_alphabet("y_alphabet", &inst.y_alphabet)?;
        check_alphabet("w_alphabet", &inst.w_alphabet)?;
        check_alphabet("h_alphabet", &inst.h_alphabet)?;
        let (n_w, n_x, n_y, n_h) = (
            inst.w_alphabet.len(),
            inst.x_alphabet.len(),
            inst.y_alphabet.len(),
            inst.h_alphabet.len(),
        );
        if inst.p_w.len() != n_w {
            return Err(Error::validation("p_w", None, format!("{} entries, expected {n_w}", inst.p_w.len())));
        }
        let p_w = FiniteDist::named("p_w", inst.p_w.clone())?;
        if let Some(w) = p_w.weights().iter().position(|&q| q <= 0.0) {
            return Err(Error::validation("p_w", Some(w), "zero prior mass; drop the symbol instead"));
        }
        let p_x_given_w = kernel("p_x_given_w", &inst.p_x_given_w, n_w, n_x)?;
        let p_y_given_x = kernel("p_y_given_x", &inst.p_y_given_x, n_x, n_y)?;

        if inst.hypotheses.len() != n_h {
            return Err(Error::validation(
                "hypotheses",
                None,
                format!("{} hypotheses for an alphabet of {n_h}", inst.hypotheses.len()),
            ));
        }
        let mut predictors = Vec::with_capacity(n_h);
        let mut deterministic = Vec::with_capacity(n_h);
        for (h, spec) in inst.hypotheses.iter().enumerate() {
            match spec {
                HypothesisSpec::Map(ys) => {
                    if ys.len() != n_x {
                        return Err(Error::validation(
                            "hypotheses",
                            Some(h),
                            format!("map has {} entries, expected {n_x}", ys.len()),
                        ));
                    }
                    let mut rows = vec![vec![0.0; n_y]; n_x];
                    for (x, y) in ys.iter().enumerate() {
                        rows[x][symbol_index(&inst.y_alphabet, y, "hypotheses", h)?] = 1.0;
                    }
                    predictors.push(StochKernel::new(rows)?);
                    deterministic.push(true);
                }
                HypothesisSpec::Table(rows) => {
                    predictors.push(kernel(&format!("hypotheses[{h}]"), rows, n_x, n_y)?);
                    deterministic.push(false);
                }
            }
        }

        let loss = match &inst.loss {
            LossSpec::ZeroOne => (0..n_y)
                .map(|y| (0..n_y).map(|z| if y == z { 0.0 } else { 1.0 }).collect())
                .collect(),
            LossSpec::Table(t) => {
                if t.len() != n_y || t.iter().any(|r| r.len() != n_y) {
                    return Err(Error::validation("loss", None, format!("loss table must be {n_y}x{n_y}")));
                }
                for (i, r) in t.iter().enumerate() {
                    if r.iter().any(|v| !v.is_finite() || *v < 0.0) {
                        return Err(Error::validation("loss", Some(i), "entries must be finite and nonnegative"));
                    }
                }
                t.clone()
            }
        };

        if inst.m == 0 {
            return Err(Error::validation("m", None, "pool size must be at least 1"));
        }
        if let Some(n) = inst.n {
            if n == 0 || n > inst.m {
                return Err(Error::validation("n", None, format!("need 1 <= n <= m = {}, got {n}", inst.m)));
            }
        }
        let b_bits = match inst.b {
            Some(b) if b.is_finite() && b > 0.0 => b,
            Some(b) => return Err(Error::validation("b", None, format!("bits per sample must be positive, got {b}"))),
            None => ((n_x * n_y) as f64).log2().max(f64::MIN_POSITIVE),
        };

        let algorithm = match inst.algorithm.kind {
            AlgorithmKind::Erm => Algorithm::Erm,
            AlgorithmKind::Gibbs => match inst.algorithm.beta {
                Some(beta) if beta.is_finite() && beta > 0.0 => Algorithm::Gibbs { beta },
                other => {
                    return Err(Error::validation(
                        "algorithm.beta",
                        None,
                        format!("gibbs needs a positive beta, got {other:?}"),
                    ))
                }
            },
            AlgorithmKind::Explicit => {
                let table = inst
                    .algorithm
                    .explicit_table
                    .as_ref()
                    .ok_or_else(|| Error::validation("algorithm.explicit_table", None, "missing for explicit kind"))?;
                let mut rows: Vec<(CanonicalDataset, Vec<f64>)> = Vec::with_capacity(table.len());
                for (i, row) in table.iter().enumerate() {
                    let mut samples = Vec::with_capacity(row.dataset.len());
                    for [xs, ys] in &row.dataset {
                        let x = symbol_index(&inst.x_alphabet, xs, "algorithm.explicit_table", i)?;
                        let y = symbol_index(&inst.y_alphabet, ys, "algorithm.explicit_table", i)?;
                        samples.push(x * n_y + y);
                    }
                    if row.probs.len() != n_h {
                        return Err(Error::validation(
                            "algorithm.explicit_table",
                            Some(i),
                            format!("{} probabilities, expected {n_h}", row.probs.len()),
                        ));
                    }
                    let probs = FiniteDist::named(&format!("algorithm.explicit_table[{i}]"), row.probs.clone())?;
                    let ds = CanonicalDataset::new(samples);
                    if rows.iter().any(|(d, _)| *d == ds) {
                        return Err(Error::validation("algorithm.explicit_table", Some(i), "duplicate dataset"));
                    }
                    rows.push((ds, probs.into_weights()));
                }
                Algorithm::Explicit { rows }
            }
        };

        let mut p = Problem {
            source: inst.clone(),
            n_w,
            n_x,
            n_y,
            n_h,
            p_w,
            p_x_given_w,
            p_y_given_x,
            predictors,
            deterministic,
            loss,
            mode: inst.distortion_mode,
            algorithm,
            m: inst.m,
            b_bits,
            n: inst.n,
            selection_mode: inst.selection_mode,
            distortion: Vec::new(),
        };
        let mut table = vec![vec![0.0; n_h]; n_w];
        for (w, row) in table.iter_mut().enumerate() {
            for (h, cell) in row.iter_mut().enumerate() {
                *cell = p.compute_distortion(w, h)?;
            }
        }
        p.distortion = table;
        Ok(p)
    }

    fn compute_distortion(&self, w: usize, h: usize) -> Result<f64> {
        let mut acc = 0.0;
        for x in 0..self.n_x {
            let px = self.p_x_given_w.get(w, x);
            if px <= 0.0 {
                continue;
            }
            let truth = self.p_y_given_x.row(x);
            let pred = self.predictors[h].row(x);
            let term = match self.mode {
                DistortionMode::Kl => {
                    let kl = kl_slices(truth, pred)?;
                    if !kl.is_finite() {
                        return Err(Error::AssumptionI(format!(
                            "KL(P*(.|x={}) || hypothesis `{}`) is infinite (reachable under w={})",
                            self.source.x_alphabet[x], self.source.h_alphabet[h], self.source.w_alphabet[w]
                        )));
                    }
                    kl
                }
                DistortionMode::ExpectedLoss => {
                    let mut e = 0.0;
                    for (y, py) in truth.iter().enumerate() {
                        for (z, pz) in pred.iter().enumerate() {
                            e += py * pz * self.loss[y][z];
                        }
                    }
                    e
                }
            };
            acc += px * term;
        }
        Ok(acc)
    }

    pub fn sample_index(&self, x: usize, y: usize) -> usize {
        x * self.n_y + y
    }

    pub fn sample_xy(&self, s: usize) -> (usize, usize) {
        (s / self.n_y, s % self.n_y)
    }

    pub fn n_samples(&self) -> usize {
        self.n_x * self.n_y
    }

    /// `P*_{XY|W}(s | w)`.
    pub fn sample_mass(&self, w: usize, s: usize) -> f64 {
        let (x, y) = self.sample_xy(s);
        self.p_x_given_w.get(w, x) * self.p_y_given_x.get(x, y)
    }

    pub fn b_nats(&self) -> f64 {
        self.b_bits * std::f64::consts::LN_2
    }

    /// Per-sample empirical risk used by ERM and Gibbs learners.
    pub fn sample_risk(&self, h: usize, s: usize) -> f64 {
        let (x, y) = self.sample_xy(s);
        if self.deterministic[h] {
            let yhat = self.predictors[h].row(x).iter().position(|p| *p > 0.5).unwrap_or(0);
            self.loss[y][yhat]
        } else {
            let p = self.predictors[h].get(x, y);
            if p > 0.0 {
                -p.ln()
            } else {
                f64::INFINITY
            }
        }
    }

    pub fn format_sample(&self, s: usize) -> String {
        let (x, y) = self.sample_xy(s);
        format!("({},{})", self.source.x_alphabet[x], self.source.y_alphabet[y])
    }

    pub fn format_dataset(&self, t: &CanonicalDataset) -> String {
        let parts: Vec<String> = t.samples().iter().map(|&s| self.format_sample(s)).collect();
        format!("[{}]", parts.join(" "))
    }

    pub fn format_pool(&self, pool: &[usize]) -> String {
        let parts: Vec<String> = pool.iter().map(|&s| self.format_sample(s)).collect();
        format!("[{}]", parts.join(" "))
    }
}

/// `d(w; h)`.
pub fn distortion(p: &Problem, w: usize, h: usize) -> f64 {
    p.distortion[w][h]
}

/// `(1/k) sum_i d(w_i; h_i)`.
pub fn block_distortion(p: &Problem, ws: &[usize], hs: &[usize]) -> Result<f64> {
    if ws.len() != hs.len() || ws.is_empty() {
        return Err(Error::Length(format!("w tuple of length {} and h tuple of length {}", ws.len(), hs.len())));
    }
    Ok(ws.iter().zip(hs).map(|(&w, &h)| p.distortion[w][h]).sum::<f64>() / ws.len() as f64)
}

/// Summary produced by [`validate_instance`].
#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub n_w: usize,
    pub n_x: usize,
    pub n_y: usize,
    pub n_h: usize,
    pub m: usize,
    pub n: Option<usize>,
    pub b_bits: f64,
    /// `(|X| |Y|)^m`, the ordered pool count per w.
    pub pool_cardinality_per_w: u128,
    pub distortion: Vec<Vec<f64>>,
    pub d_min: Option<f64>,
    pub d_max_reachable: Option<f64>,
    pub d_max_unrestricted: Option<f64>,
    pub warnings: Vec<String>,
}

impl fmt::Display for Diagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "|W|={} |X|={} |Y|={} |H|={}", self.n_w, self.n_x, self.n_y, self.n_h)?;
        writeln!(f, "m={} n={} b={} bits", self.m, self.n.map_or("-".into(), |n| n.to_string()), self.b_bits)?;
        writeln!(f, "pool cardinality per w: {}", self.pool_cardinality_per_w)?;
        for (w, row) in self.distortion.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(|d| format!("{d:.6}")).collect();
            writeln!(f, "d(w={w}; .) = {}", cells.join(" "))?;
        }
        let show = |v: Option<f64>| v.map_or("n/a".to_string(), |d| format!("{d:.9}"));
        writeln!(f, "d_min = {}", show(self.d_min))?;
        writeln!(f, "d_max (constant mixture) = {}", show(self.d_max_reachable))?;
        writeln!(f, "d_max (unrestricted) = {}", show(self.d_max_unrestricted))?;
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        Ok(())
    }
}

pub(crate) fn checked_pow(base: usize, exp: usize) -> u128 {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.saturating_mul(base as u128);
    }
    acc
}
