//! Constrained rate-distortion: Lagrangian solves, curve sweeps, envelope
//! interpolation and target-distortion solves.

mod curve;
mod solver;
mod target;

pub use curve::{default_lambda_grid, lower_hull, sweep_lambda, Inversion, RDCurve, MONOTONE_TOL};
pub use solver::{
    evaluate_rows, h_given_u, point_from_rows, solve_lagrangian, solve_lagrangian_from, uniform_rows, Convergence,
    LagrangianPoint, SolverConfig,
};
pub use target::{refine_around, solve_at_distortion, TargetSolve};
