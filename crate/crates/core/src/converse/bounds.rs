use std::f64::consts::LN_2;

use serde::Serialize;

use super::q::q_inverse;
use super::report::ConverseReport;
use crate::dispersion::{DispersionReport, TiltedTable};
use crate::error::{Error, Result};
use crate::rd::RDCurve;

/// Left-limit offset used next to each jump of the tail function.
const JUMP_ETA: f64 = 1e-12;
/// Values closer than this (relative) are merged when convolving.
const MERGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Variant {
    Exact,
    Asymptotic,
    Explicit,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Exact => "exact",
            Variant::Asymptotic => "asymptotic",
            Variant::Explicit => "explicit",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Variant::Exact),
            "asymptotic" => Ok(Variant::Asymptotic),
            "explicit" => Ok(Variant::Explicit),
            other => Err(Error::Domain(format!("unknown variant {other:?}"))),
        }
    }
}

/// `sup_{gamma >= 0} P[J - bn >= gamma] - e^{-gamma}` for a finite law of
/// `J` given as `(value, mass)` pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpsilonBound {
    /// Clamped to `[0, 1]`.
    pub eps_lower: f64,
    pub gamma_star: f64,
    pub bn_nats: f64,
    pub vacuous: bool,
}

pub fn epsilon_bound_from_law(law: &[(f64, f64)], bn_nats: f64) -> EpsilonBound {
    let tail = |g: f64| -> f64 { law.iter().filter(|(v, _)| v - bn_nats >= g).map(|(_, p)| p).sum() };
    let objective = |g: f64| tail(g) - (-g).exp();
    let mut best = (objective(0.0), 0.0);
    for &(v, _) in law {
        let g = v - bn_nats;
        if g <= 0.0 {
            continue;
        }
        for cand in [g, (g - JUMP_ETA).max(0.0)] {
            let f = objective(cand);
            if f > best.0 {
                best = (f, cand);
            }
        }
    }
    EpsilonBound {
        eps_lower: best.0.clamp(0.0, 1.0),
        gamma_star: best.1,
        bn_nats,
        vacuous: best.0 <= 0.0,
    }
}

/// Law of `sum_{i<k} J_i` for i.i.d. copies of the tilted information,
/// merging values that agree to rounding.
pub fn block_tilted_law(tilted: &TiltedTable, k: usize, max_atoms: usize) -> Result<Vec<(f64, f64)>> {
    if k == 0 {
        return Err(Error::Domain("k must be positive".into()));
    }
    let single = tilted.distribution();
    let mut law = vec![(0.0, 1.0)];
    for _ in 0..k {
        let mut next: Vec<(f64, f64)> = Vec::with_capacity(law.len() * single.len());
        for &(a, pa) in &law {
            for &(b, pb) in &single {
                next.push((a + b, pa * pb));
            }
        }
        next.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(next.len());
        for (v, p) in next {
            match merged.last_mut() {
                Some(last) if (v - last.0).abs() <= MERGE_TOL * (1.0 + v.abs()) => last.1 += p,
                _ => merged.push((v, p)),
            }
        }
        if merged.len() > max_atoms {
            return Err(Error::Budget {
                what: "block tilted-information atoms".into(),
                required: merged.len() as u128,
                budget: max_atoms as u128,
            });
        }
        law = merged;
    }
    Ok(law)
}

/// Excess-distortion lower bound for `k` letters and `n` labels of `b` bits.
pub fn theorem1_epsilon_bound(tilted: &TiltedTable, k: usize, n: usize, b_bits: f64) -> Result<EpsilonBound> {
    if !(b_bits > 0.0) {
        return Err(Error::Domain(format!("b must be positive, got {b_bits}")));
    }
    let law = block_tilted_law(tilted, k, 1_000_000)?;
    Ok(epsilon_bound_from_law(&law, n as f64 * b_bits * LN_2))
}

pub fn theorem1_report(tilted: &TiltedTable, k: usize, m: usize, n: usize, b_bits: f64) -> Result<ConverseReport> {
    let e = theorem1_epsilon_bound(tilted, k, n, b_bits)?;
    let mut r = ConverseReport::new(1, Variant::Exact, k, m);
    r.n = Some(n);
    r.d = Some(tilted.d);
    r.lambda_star = Some(tilted.lambda_star);
    r.gamma = Some(e.gamma_star);
    r.bound_value = e.eps_lower;
    r.bound_without_o_term = e.eps_lower;
    if e.vacuous {
        r.flags.push("vacuous".into());
    }
    Ok(r)
}

fn label_bound(k: usize, rate: f64, b_bits: f64) -> u64 {
    (k as f64 * rate / (b_bits * LN_2)).ceil().max(0.0) as u64
}

/// Inputs of the rate bound besides the curve and dispersion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateQuery {
    pub k: usize,
    pub m: usize,
    pub d: f64,
    pub eps: f64,
    pub variant: Variant,
    /// Bits per label.
    pub b_bits: f64,
}

/// Rate (nats per letter) and label-count lower bounds.
pub fn theorem2_rate_bound(curve: &RDCurve, report: &DispersionReport, query: &RateQuery) -> Result<ConverseReport> {
    let RateQuery {
        k,
        m,
        d,
        eps,
        variant,
        b_bits,
    } = *query;
    if k == 0 {
        return Err(Error::Domain("k must be positive".into()));
    }
    if !(d > curve.d_min && d < curve.d_max) {
        return Err(Error::Range(format!("d = {d} outside ({}, {})", curve.d_min, curve.d_max)));
    }
    let q = q_inverse(eps)?;
    let kf = k as f64;
    let rate = curve.rate_at_distortion(d)?;
    let v = report.v;
    let mut r = ConverseReport::new(2, Variant::Asymptotic, k, m);
    r.d = Some(d);
    r.eps = Some(eps);
    r.rate = Some(rate);
    r.v = Some(v);
    r.lambda_star = Some(report.lambda_star);
    r.q_inv = Some(q);
    r.berry_esseen_b = report.berry_esseen_b;
    if report.zero_dispersion {
        r.flags.push("zero-dispersion".into());
    }
    let asym_main = rate + (v / kf).sqrt() * q;
    let asym = asym_main - kf.ln() / (2.0 * kf);
    r.bound_value = asym;
    r.bound_without_o_term = asym_main;
    if variant == Variant::Explicit {
        if report.zero_dispersion {
            let gamma = (1.0 / (1.0 - eps)).ln();
            r.variant = Variant::Explicit;
            r.gamma = Some(gamma);
            r.bound_value = rate - gamma / kf;
            r.bound_without_o_term = rate;
        } else {
            let gamma = 0.5 * kf.ln();
            let b = report.berry_esseen_b.unwrap_or(f64::INFINITY);
            let eps_k = eps + (-gamma).exp() + b / kf.sqrt();
            r.gamma = Some(gamma);
            r.eps_k = Some(eps_k);
            if eps_k < 1.0 {
                let qk = q_inverse(eps_k)?;
                r.variant = Variant::Explicit;
                r.q_inv = Some(qk);
                r.bound_without_o_term = rate + (v / kf).sqrt() * qk;
                r.bound_value = r.bound_without_o_term - gamma / kf;
            } else {
                r.flags.push("eps_k>=1".into());
            }
        }
    } else if variant == Variant::Exact {
        return Err(Error::Domain("the rate bound has asymptotic and explicit variants only".into()));
    }
    r.label_bound = Some(label_bound(k, r.bound_value, b_bits));
    Ok(r)
}

/// Distortion-rate lower bound at rate `rate` (nats per letter).
/// `v_at` returns the dispersion at the given distortion; it is not called
/// when the rate lies outside the curve's range.
pub fn theorem3_distortion_bound<F>(
    curve: &RDCurve,
    k: usize,
    m: usize,
    rate: f64,
    eps: f64,
    v_at: F,
) -> Result<ConverseReport>
where
    F: FnOnce(f64) -> Result<f64>,
{
    if k == 0 {
        return Err(Error::Domain("k must be positive".into()));
    }
    if !(rate >= 0.0) {
        return Err(Error::Range(format!("rate must be nonnegative, got {rate}")));
    }
    let q = q_inverse(eps)?;
    let kf = k as f64;
    let mut r = ConverseReport::new(3, Variant::Asymptotic, k, m);
    r.eps = Some(eps);
    r.rate = Some(rate);
    r.q_inv = Some(q);
    let (lo, hi) = (curve.envelope[curve.envelope.len() - 1].1, curve.max_rate());
    let inside = rate > lo && rate < hi;
    let (big_d, d_prime, v) = if inside {
        let inv = curve.invert_to_distortion(rate)?;
        if inv.kink {
            r.flags.push("kinked-envelope".into());
        }
        let v = v_at(inv.d)?;
        (inv.d, inv.d_prime, v)
    } else {
        // Outside the curve the distortion-rate function is flat.
        r.flags.push("rate-saturated".into());
        let d = if rate >= hi { curve.envelope[0].0 } else { curve.d_max };
        (d, 0.0, 0.0)
    };
    let script_v = d_prime * d_prime * v;
    let c = 0.5 * d_prime.abs();
    r.d = Some(big_d);
    r.v = Some(v);
    r.big_d = Some(big_d);
    r.d_prime = Some(d_prime);
    r.script_v = Some(script_v);
    if d_prime != 0.0 {
        r.lambda_star = Some(-1.0 / d_prime);
    }
    r.bound_without_o_term = big_d + (script_v / kf).sqrt() * q;
    r.bound_value = r.bound_without_o_term - c * kf.ln() / kf;
    r.statement_extra_term = Some(r.bound_value + d_prime);
    Ok(r)
}
