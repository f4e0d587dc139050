use serde::Serialize;

use super::joint::{induced_joint, InducedJoint};
use super::report::{dispersion_report, DispersionReport};
use super::tilted::{tilted_information, TiltedTable};
use crate::error::Result;
use crate::instance::Model;
use crate::rd::{solve_at_distortion, RDCurve, SolverConfig, TargetSolve};

/// Everything computed at one target distortion.
#[derive(Debug, Clone, Serialize)]
pub struct PointAnalysis {
    pub solve: TargetSolve,
    pub joint: InducedJoint,
    pub tilted: TiltedTable,
    pub report: DispersionReport,
}

/// Solve for `S*` at `d`, then build the joint, tilted table and report.
pub fn analyze_at(model: &Model, curve: &RDCurve, d: f64, config: &SolverConfig) -> Result<PointAnalysis> {
    let solve = solve_at_distortion(model, curve, d, config)?;
    let joint = induced_joint(model, &solve.point.selection_kernel)?;
    let tilted = tilted_information(&joint, curve, d)?;
    let report = dispersion_report(&joint, &tilted)?;
    Ok(PointAnalysis {
        solve,
        joint,
        tilted,
        report,
    })
}
