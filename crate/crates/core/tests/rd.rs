mod common;

use approx::assert_abs_diff_eq;
use poolrate_core::instance::fixtures::{identity_learner, noisy_bit, noisy_bit_asymmetric};
use poolrate_core::instance::*;
use poolrate_core::rd::*;
use poolrate_core::Error;

fn model(inst: &ProblemInstance) -> Model {
    Model::from_instance(inst, Budget::default()).unwrap()
}

fn cfg() -> SolverConfig {
    SolverConfig::default()
}

#[test]
fn zero_lambda_gives_zero_rate_when_constant_output_reachable() {
    let mut inst = noisy_bit();
    inst.selection_mode = SelectionMode::AnySubset;
    inst.n = None;
    let m = model(&inst);
    let b = compute_d_bounds(&m).unwrap();
    let p = solve_lagrangian(&m, 0.0, &cfg()).unwrap();
    assert!(p.rate.abs() < 1e-12);
    assert_abs_diff_eq!(p.avg_distortion, b.d_max_reachable.unwrap(), epsilon = 1e-9);
}

#[test]
fn negative_lambda_is_domain_error() {
    let m = model(&noisy_bit());
    assert!(matches!(solve_lagrangian(&m, -1.0, &cfg()), Err(Error::Domain(_))));
}

#[test]
fn identity_learner_matches_blahut_arimoto() {
    let m = model(&identity_learner());
    for l in [0.2, 1.0, 3.0, 10.0] {
        let p = solve_lagrangian(&m, l, &cfg()).unwrap();
        let (r, d) = common::blahut_arimoto(&m, l);
        // Compare on the supporting line of slope -lambda.
        assert!((p.rate + l * (p.avg_distortion - d) - r).abs() < 1e-6, "lambda {l}");
        assert!((p.rate + l * p.avg_distortion - (r + l * d)).abs() < 1e-9);
    }
}

#[test]
fn large_lambda_reaches_d_min() {
    for inst in [noisy_bit(), noisy_bit_asymmetric(), identity_learner()] {
        let m = model(&inst);
        let b = compute_d_bounds(&m).unwrap();
        let p = solve_lagrangian(&m, 1e4, &cfg()).unwrap();
        assert!((p.avg_distortion - b.d_min).abs() < 1e-6, "{} vs {}", p.avg_distortion, b.d_min);
    }
}

#[test]
fn solver_values_match_recomputation() {
    let m = model(&noisy_bit_asymmetric());
    let p = solve_lagrangian(&m, 2.0, &cfg()).unwrap();
    let (r, d, q) = evaluate_rows(&m, &p.rows);
    assert!((r - p.rate).abs() < 1e-9);
    assert!((d - p.avg_distortion).abs() < 1e-12);
    for (a, b) in q.iter().zip(p.h_marginal.weights()) {
        assert!((a - b).abs() < 1e-12);
    }
    for u in 0..m.n_pools() {
        for (t, &s) in p.selection_kernel.row(u).iter().enumerate() {
            if s > 0.0 {
                assert!(m.choices(u).iter().any(|c| c.dataset == t));
            }
        }
    }
}

#[test]
fn distortion_decreases_in_lambda() {
    let m = model(&noisy_bit_asymmetric());
    let a = solve_lagrangian(&m, 1.0, &cfg()).unwrap();
    let b = solve_lagrangian(&m, 5.0, &cfg()).unwrap();
    assert!(a.avg_distortion >= b.avg_distortion - 1e-12);
    assert!(a.rate <= b.rate + 1e-12);
}

#[test]
fn single_zero_lambda_grid() {
    let mut inst = noisy_bit();
    inst.selection_mode = SelectionMode::AnySubset;
    inst.n = None;
    let m = model(&inst);
    let c = sweep_lambda(&m, &[0.0], &cfg()).unwrap();
    assert_eq!(c.points.len(), 1);
    assert_eq!(c.rate_at_distortion(c.d_max).unwrap(), 0.0);
}

#[test]
fn curve_is_convex_and_nonincreasing() {
    let m = model(&noisy_bit_asymmetric());
    let c = sweep_lambda(&m, &default_lambda_grid(), &cfg()).unwrap();
    let slopes: Vec<f64> = c.envelope.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0)).collect();
    assert!(slopes.iter().all(|s| *s <= 1e-12));
    for w in slopes.windows(2) {
        assert!(w[0] <= w[1] + 1e-9);
    }
    assert_eq!(c.rate_at_distortion(c.d_max).unwrap(), c.rate_floor);
    assert!((c.rate_at_distortion(c.d_min).unwrap() - c.max_rate()).abs() < 1e-12);
    assert!(matches!(c.rate_at_distortion(c.d_max + 0.1), Err(Error::Range(_))));
}

#[test]
fn interpolation_at_knots_and_midpoints() {
    let m = model(&identity_learner());
    let c = sweep_lambda(&m, &default_lambda_grid(), &cfg()).unwrap();
    for &(d, r) in &c.envelope {
        assert!((c.rate_at_distortion(d).unwrap() - r).abs() < 1e-12);
    }
    let (a, b) = (c.envelope[3], c.envelope[4]);
    let mid = c.rate_at_distortion(0.5 * (a.0 + b.0)).unwrap();
    assert!((mid - 0.5 * (a.1 + b.1)).abs() < 1e-12);
}

#[test]
fn lambda_star_reproduces_distortion_on_resolve() {
    let m = model(&noisy_bit_asymmetric());
    let c = sweep_lambda(&m, &default_lambda_grid(), &cfg()).unwrap();
    let d = 0.5 * (c.d_min + c.d_max);
    let l = c.lambda_star(d).unwrap();
    assert!(l > 0.0);
    let p = solve_lagrangian(&m, l, &cfg()).unwrap();
    assert!((p.avg_distortion - d).abs() / d < 2e-2);
    assert!(matches!(c.lambda_star(c.d_max), Err(Error::Range(_))));
}

#[test]
fn local_refinement_agrees_at_mid_distortion() {
    let m = model(&noisy_bit_asymmetric());
    let c = sweep_lambda(&m, &default_lambda_grid(), &cfg()).unwrap();
    let d = 0.5 * (c.d_min + c.d_max);
    let fine = refine_around(&m, &c, d, &cfg()).unwrap();
    let (r0, r1) = (c.rate_at_distortion(d).unwrap(), fine.rate_at_distortion(d).unwrap());
    assert!(r1 <= r0 + 1e-9);
    assert!((r0 - r1).abs() < 1e-3 * r0.max(1e-3), "{r0} vs {r1}");
}

#[test]
fn inversion_roundtrip() {
    let m = model(&identity_learner());
    let c = sweep_lambda(&m, &default_lambda_grid(), &cfg()).unwrap();
    let d_zero = c.invert_to_distortion(c.rate_floor).unwrap();
    assert!((d_zero.d - c.d_max).abs() < 1e-12);
    let k = c.envelope[5];
    assert!((c.invert_to_distortion(k.1).unwrap().d - k.0).abs() < 1e-9);
    for frac in [0.1, 0.37, 0.5, 0.8] {
        let r = c.rate_floor + frac * (c.max_rate() - c.rate_floor);
        let inv = c.invert_to_distortion(r).unwrap();
        assert!(inv.d_prime < 0.0);
        assert!((c.rate_at_distortion(inv.d).unwrap() - r).abs() < 1e-9);
    }
    assert!(matches!(c.invert_to_distortion(c.max_rate() + 1.0), Err(Error::Range(_))));
}

#[test]
fn target_solve_hits_distortion() {
    let m = model(&noisy_bit_asymmetric());
    let c = sweep_lambda(&m, &default_lambda_grid(), &cfg()).unwrap();
    let d = c.d_min + 0.3 * (c.d_max - c.d_min);
    let t = solve_at_distortion(&m, &c, d, &cfg()).unwrap();
    assert!((t.point.avg_distortion - d).abs() < 1e-6 * (c.d_max - c.d_min));
}

#[test]
fn curve_csv_header() {
    let m = model(&identity_learner());
    let c = sweep_lambda(&m, &[0.0, 1.0, 10.0], &cfg()).unwrap();
    let mut buf = Vec::new();
    c.write_csv(&mut buf).unwrap();
    let s = String::from_utf8(buf).unwrap();
    assert!(s.starts_with("lambda,distortion,rate_nats,rate_bits\n"));
    assert_eq!(s.lines().count(), 1 + c.points.len());
}
