use std::f64::consts::LN_2;

use poolrate_core::converse::*;
use poolrate_core::dispersion::*;
use poolrate_core::instance::fixtures::*;
use poolrate_core::instance::*;
use poolrate_core::rd::*;
use poolrate_core::Error;

fn setup(inst: &ProblemInstance, frac: f64) -> (Model, RDCurve, PointAnalysis) {
    let m = Model::from_instance(inst, Budget::default()).unwrap();
    let c = sweep_lambda(&m, &default_lambda_grid(), &SolverConfig::default()).unwrap();
    let d = c.d_min + frac * (c.d_max - c.d_min);
    let a = analyze_at(&m, &c, d, &SolverConfig::default()).unwrap();
    (m, c, a)
}

fn constant_table(c: f64) -> TiltedTable {
    TiltedTable {
        d: 0.3,
        d_center: 0.3,
        lambda_star: 1.0,
        values: vec![((0, 0, 0), c, 0.25), ((0, 1, 1), c, 0.75)],
    }
}

#[test]
fn epsilon_bound_vacuous_above_support() {
    let e = theorem1_epsilon_bound(&constant_table(0.5), 1, 1, 2.0).unwrap();
    assert_eq!(e.eps_lower, 0.0);
    assert!(e.vacuous);
}

#[test]
fn epsilon_bound_for_constant_density() {
    let (c, b) = (3.0, 1.0);
    let e = theorem1_epsilon_bound(&constant_table(c), 1, 1, b).unwrap();
    let want = 1.0 - (-(c - b * LN_2)).exp();
    assert!((e.eps_lower - want).abs() < 1e-12);
}

#[test]
fn epsilon_bound_against_dense_grid() {
    let (_, _, a) = setup(&noisy_bit(), 0.5);
    // Small b so the bound is not vacuous.
    for b in [0.05, 0.1, 0.2] {
        let e = theorem1_epsilon_bound(&a.tilted, 1, 1, b).unwrap();
        let law = a.tilted.distribution();
        let bn = b * LN_2;
        let top = law.iter().map(|x| x.0).fold(f64::MIN, f64::max) - bn;
        let n = 100_000;
        let h = top.max(0.0) / n as f64;
        let mut grid_best = f64::MIN;
        for i in 0..=n {
            let g = i as f64 * h;
            let p: f64 = law.iter().filter(|x| x.0 >= bn + g).map(|x| x.1).sum();
            grid_best = grid_best.max(p - (-g).exp());
        }
        let grid = grid_best.clamp(0.0, 1.0);
        // The grid can only miss the supremum by the Lipschitz slack of e^-g.
        assert!(grid <= e.eps_lower + 1e-12, "{grid} > {}", e.eps_lower);
        assert!(e.eps_lower - grid <= h + 1e-12);
    }
}

#[test]
fn epsilon_bound_nonincreasing_in_labels() {
    let (_, _, a) = setup(&noisy_bit_asymmetric(), 0.5);
    let vals: Vec<f64> = (0..5).map(|n| theorem1_epsilon_bound(&a.tilted, 3, n, 0.1).unwrap().eps_lower).collect();
    assert!(vals.windows(2).all(|w| w[1] <= w[0] + 1e-15));
}

#[test]
fn block_law_sums_letters() {
    let law = block_tilted_law(&constant_table(0.7), 3, 1000).unwrap();
    assert_eq!(law.len(), 1);
    assert!((law[0].0 - 2.1).abs() < 1e-12 && (law[0].1 - 1.0).abs() < 1e-12);
}

#[test]
fn zero_dispersion_explicit_rate_bound() {
    let (_, c, a) = setup(&noisy_bit_asymmetric(), 0.5);
    let mut rep = a.report.clone();
    rep.v = 0.0;
    rep.zero_dispersion = true;
    rep.berry_esseen_b = None;
    let d = a.tilted.d;
    let eps = 1.0 - (-1.0f64).exp();
    let q = RateQuery { k: 1, m: 2, d, eps, variant: Variant::Explicit, b_bits: 2.0 };
    let r = theorem2_rate_bound(&c, &rep, &q).unwrap();
    let rate = c.rate_at_distortion(d).unwrap();
    assert!((r.bound_value - (rate - 1.0)).abs() < 1e-12);
    assert!(r.flags.iter().any(|f| f == "zero-dispersion"));
}

#[test]
fn median_rate_bound_is_rate_minus_log_term() {
    let (_, c, a) = setup(&noisy_bit_asymmetric(), 0.5);
    let d = a.tilted.d;
    for k in [1usize, 10, 100] {
        let q = RateQuery { k, m: 2, d, eps: 0.5, variant: Variant::Asymptotic, b_bits: 2.0 };
        let r = theorem2_rate_bound(&c, &a.report, &q).unwrap();
        let kf = k as f64;
        assert!((r.bound_value - (c.rate_at_distortion(d).unwrap() - kf.ln() / (2.0 * kf))).abs() < 1e-12);
        let want = (kf * r.bound_value / (2.0 * LN_2)).ceil().max(0.0) as u64;
        assert_eq!(r.label_bound, Some(want));
    }
}

#[test]
fn rate_bound_monotone_in_eps_and_d() {
    let (m, c, a) = setup(&noisy_bit_asymmetric(), 0.5);
    let d = a.tilted.d;
    let at = |eps: f64, d: f64, rep: &DispersionReport| {
        let q = RateQuery { k: 50, m: 2, d, eps, variant: Variant::Asymptotic, b_bits: 2.0 };
        theorem2_rate_bound(&c, rep, &q).unwrap().bound_value
    };
    let e: Vec<f64> = [0.05, 0.1, 0.3, 0.5, 0.9].iter().map(|&x| at(x, d, &a.report)).collect();
    assert!(e.windows(2).all(|w| w[1] <= w[0]));
    let d2 = c.d_min + 0.7 * (c.d_max - c.d_min);
    let b = analyze_at(&m, &c, d2, &SolverConfig::default()).unwrap();
    assert!(at(0.5, d2, &b.report) <= at(0.5, d, &a.report));
}

#[test]
fn explicit_rate_bound_flags_large_eps_k() {
    let (_, c, a) = setup(&noisy_bit_asymmetric(), 0.5);
    let q = RateQuery { k: 2, m: 2, d: a.tilted.d, eps: 0.9, variant: Variant::Explicit, b_bits: 2.0 };
    let r = theorem2_rate_bound(&c, &a.report, &q).unwrap();
    assert!(r.flags.iter().any(|f| f == "eps_k>=1"));
    assert_eq!(r.variant, Variant::Asymptotic);
    let q = RateQuery { k: 1_000_000, variant: Variant::Explicit, eps: 0.1, ..q };
    let r = theorem2_rate_bound(&c, &a.report, &q).unwrap();
    assert_eq!(r.variant, Variant::Explicit);
    assert!(r.eps_k.unwrap() < 1.0);
}

#[test]
fn rate_bound_rejects_boundary() {
    let (_, c, a) = setup(&noisy_bit_asymmetric(), 0.5);
    let q = RateQuery { k: 2, m: 2, d: c.d_max, eps: 0.1, variant: Variant::Asymptotic, b_bits: 2.0 };
    assert!(matches!(theorem2_rate_bound(&c, &a.report, &q), Err(Error::Range(_))));
    let q = RateQuery { d: a.tilted.d, eps: 1.0, ..q };
    assert!(matches!(theorem2_rate_bound(&c, &a.report, &q), Err(Error::Domain(_))));
}

#[test]
fn distortion_bound_median_and_limit() {
    let (m, c, a) = setup(&noisy_bit_asymmetric(), 0.5);
    let rate = c.rate_at_distortion(a.tilted.d).unwrap();
    let v_at = |d: f64| analyze_at(&m, &c, d, &SolverConfig::default()).map(|p| p.report.v);
    let k = 100;
    let r = theorem3_distortion_bound(&c, k, 2, rate, 0.5, v_at).unwrap();
    let inv = c.invert_to_distortion(rate).unwrap();
    let cc = 0.5 * inv.d_prime.abs();
    let kf = k as f64;
    assert!((r.bound_value - (inv.d - cc * kf.ln() / kf)).abs() < 1e-12);
    assert!((r.statement_extra_term.unwrap() - (r.bound_value + inv.d_prime)).abs() < 1e-15);
    let far = theorem3_distortion_bound(&c, 1usize << 60, 2, rate, 0.1, v_at).unwrap();
    assert!((far.bound_value - a.tilted.d).abs() < 1e-6);
}

#[test]
fn distortion_bound_saturates_beyond_curve() {
    let (_, c, _) = setup(&noisy_bit_asymmetric(), 0.5);
    let r = theorem3_distortion_bound(&c, 10, 2, 10.0, 0.1, |_| panic!("no dispersion needed")).unwrap();
    assert!(r.flags.iter().any(|f| f == "rate-saturated"));
    assert_eq!(r.bound_value, c.envelope[0].0);
}

#[test]
fn converse_csv_header() {
    let r = theorem1_report(&constant_table(2.0), 1, 2, 1, 1.0).unwrap();
    let mut buf = Vec::new();
    write_converse_csv(&[r], &mut buf).unwrap();
    let s = String::from_utf8(buf).unwrap();
    assert!(s.starts_with("theorem,variant,k,m,n,d,eps,R_nats,V,lambda_star,bound_value,flags\n"));
}
