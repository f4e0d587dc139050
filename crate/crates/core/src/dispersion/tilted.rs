use serde::Serialize;

use super::joint::InducedJoint;
use crate::error::{Error, Result};
use crate::rd::RDCurve;

/// `j(w,u,h) = iota_{U;H}(u;h) + lambda* (d(w;h) - d_center)` per support atom
/// of the `(W, U, H)` marginal.
#[derive(Debug, Clone, Serialize)]
pub struct TiltedTable {
    /// Requested distortion.
    pub d: f64,
    /// Distortion the correction is centred on.
    pub d_center: f64,
    pub lambda_star: f64,
    /// `((w, u, h), value, mass)`.
    pub values: Vec<((usize, usize, usize), f64, f64)>,
}

impl TiltedTable {
    pub fn get(&self, w: usize, u: usize, h: usize) -> Option<f64> {
        self.values
            .binary_search_by(|(k, _, _)| k.cmp(&(w, u, h)))
            .ok()
            .map(|i| self.values[i].1)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().map(|(_, j, p)| p * j).sum()
    }

    /// Sorted distinct values with their total mass.
    pub fn distribution(&self) -> Vec<(f64, f64)> {
        let mut v: Vec<(f64, f64)> = self.values.iter().map(|(_, j, p)| (*j, *p)).collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(v.len());
        for (j, p) in v {
            match out.last_mut() {
                Some(last) if last.0 == j => last.1 += p,
                _ => out.push((j, p)),
            }
        }
        out
    }
}

/// Tilted information for the solved joint. The slope is read off the curve
/// at the joint's achieved distortion, which is also the centring point.
pub fn tilted_information(joint: &InducedJoint, curve: &RDCurve, d: f64) -> Result<TiltedTable> {
    if !(d > curve.d_min && d < curve.d_max) {
        return Err(Error::Range(format!(
            "tilted information needs d strictly inside ({}, {}), got {d}",
            curve.d_min, curve.d_max
        )));
    }
    let achieved = joint.avg_distortion;
    let lambda = curve.lambda_star(achieved).or_else(|_| curve.lambda_star(d))?;
    let mut t = tilted_information_at(joint, lambda, achieved);
    t.d = d;
    Ok(t)
}

/// Tilted information with an explicit slope and centring distortion.
pub fn tilted_information_at(joint: &InducedJoint, lambda_star: f64, d_center: f64) -> TiltedTable {
    let mut values: Vec<((usize, usize, usize), f64, f64)> = Vec::new();
    for a in &joint.atoms {
        let j = joint.iota_uh(a.u, a.h) + lambda_star * (joint.distortion[a.w][a.h] - d_center);
        values.push(((a.w, a.u, a.h), j, a.p));
    }
    values.sort_by_key(|a| a.0);
    let mut merged: Vec<((usize, usize, usize), f64, f64)> = Vec::with_capacity(values.len());
    for v in values {
        match merged.last_mut() {
            Some(last) if last.0 == v.0 => last.2 += v.2,
            _ => merged.push(v),
        }
    }
    TiltedTable {
        d: d_center,
        d_center,
        lambda_star,
        values: merged,
    }
}
