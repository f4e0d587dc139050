use serde::Serialize;

use super::curve::RDCurve;
use super::solver::{point_from_rows, solve_lagrangian_from, Convergence, LagrangianPoint, SolverConfig};
use crate::error::{Error, Result};
use crate::instance::Model;

/// Selection solved for a requested distortion.
#[derive(Debug, Clone, Serialize)]
pub struct TargetSolve {
    pub target: f64,
    pub point: LagrangianPoint,
    pub bracket: (f64, f64),
    /// Weight on the low-lambda kernel when two kernels were mixed to land
    /// on a jump of the Lagrangian path.
    pub mix_alpha: Option<f64>,
    pub bisections: usize,
}

/// Bisect on lambda until `|E dbar - target| < 1e-6 (d_max - d_min)`.
pub fn solve_at_distortion(model: &Model, curve: &RDCurve, target: f64, config: &SolverConfig) -> Result<TargetSolve> {
    if !(target >= curve.d_min && target <= curve.d_max) {
        return Err(Error::Range(format!("target {target} outside [{}, {}]", curve.d_min, curve.d_max)));
    }
    let tol = 1e-6 * (curve.d_max - curve.d_min).max(f64::MIN_POSITIVE);
    // Bracket from the curve's own points.
    let mut lo = curve
        .points
        .iter()
        .filter(|p| p.avg_distortion >= target)
        .min_by(|a, b| a.avg_distortion.total_cmp(&b.avg_distortion))
        .cloned();
    let mut hi = curve
        .points
        .iter()
        .filter(|p| p.avg_distortion <= target)
        .max_by(|a, b| a.avg_distortion.total_cmp(&b.avg_distortion))
        .cloned();
    if lo.is_none() {
        lo = Some(solve_lagrangian_from(model, 0.0, config, None)?);
    }
    if hi.is_none() {
        let mut l = curve.points.iter().map(|p| p.lambda).fold(1.0, f64::max);
        loop {
            let p = solve_lagrangian_from(model, l, config, None)?;
            if p.avg_distortion <= target || l > 1e12 {
                hi = Some(p);
                break;
            }
            l *= 4.0;
        }
    }
    let (mut lo, mut hi) = (lo.unwrap(), hi.unwrap());
    for p in [&lo, &hi] {
        if (p.avg_distortion - target).abs() < tol {
            return Ok(TargetSolve {
                target,
                point: p.clone(),
                bracket: (lo.lambda, hi.lambda),
                mix_alpha: None,
                bisections: 0,
            });
        }
    }
    let mut steps = 0;
    while steps < 200 {
        steps += 1;
        let mid = 0.5 * (lo.lambda + hi.lambda);
        if hi.lambda - lo.lambda <= 1e-13 * hi.lambda.max(1.0) || mid <= lo.lambda || mid >= hi.lambda {
            break;
        }
        let warm = if (lo.avg_distortion - target).abs() < (hi.avg_distortion - target).abs() { &lo } else { &hi };
        let p = solve_lagrangian_from(model, mid, config, Some(&warm.rows))?;
        if (p.avg_distortion - target).abs() < tol {
            return Ok(TargetSolve {
                target,
                point: p,
                bracket: (lo.lambda, hi.lambda),
                mix_alpha: None,
                bisections: steps,
            });
        }
        if p.avg_distortion > target {
            lo = p;
        } else {
            hi = p;
        }
    }
    // The path jumps across the target: mix the bracketing kernels.
    let alpha = ((target - hi.avg_distortion) / (lo.avg_distortion - hi.avg_distortion)).clamp(0.0, 1.0);
    let rows: Vec<Vec<f64>> = lo
        .rows
        .iter()
        .zip(&hi.rows)
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| alpha * x + (1.0 - alpha) * y).collect())
        .collect();
    let conv = Convergence {
        outer_iters: lo.convergence.outer_iters.max(hi.convergence.outer_iters),
        final_objective_delta: lo.convergence.final_objective_delta.max(hi.convergence.final_objective_delta),
        inner_gap: lo.convergence.inner_gap.max(hi.convergence.inner_gap),
    };
    let lambda = 0.5 * (lo.lambda + hi.lambda);
    let point = point_from_rows(model, lambda, rows, conv)?;
    Ok(TargetSolve {
        target,
        point,
        bracket: (lo.lambda, hi.lambda),
        mix_alpha: Some(alpha),
        bisections: steps,
    })
}

/// Re-sweep with extra lambda values around `lambda*(d)`.
pub fn refine_around(model: &Model, curve: &RDCurve, d: f64, config: &SolverConfig) -> Result<RDCurve> {
    let l = curve.lambda_star(d)?;
    let mut grid: Vec<f64> = curve.points.iter().map(|p| p.lambda).collect();
    for i in -10..=10 {
        grid.push(l * (1.0 + 0.02 * i as f64));
    }
    super::curve::sweep_lambda(model, &grid, config)
}
