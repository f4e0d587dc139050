use poolrate_core::converse::*;
use poolrate_core::dispersion::*;
use poolrate_core::instance::fixtures::*;
use poolrate_core::instance::*;
use poolrate_core::oracle::*;
use poolrate_core::prob::StochKernel;
use poolrate_core::rd::*;
use poolrate_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn model(inst: &ProblemInstance) -> Model {
    Model::from_instance(inst, Budget::default()).unwrap()
}

fn random_map(m: &Model, rng: &mut ChaCha8Rng) -> SelectionMap {
    let a = (0..m.n_pools()).map(|u| rng.random_range(0..m.choices(u).len())).collect();
    SelectionMap::new(m, a).unwrap()
}

/// Excess mass by walking `(w, u, h)` directly from the instance tables.
fn atom_walk(m: &Model, map: &SelectionMap, d: f64) -> f64 {
    let mut eps = 0.0;
    for w in 0..m.problem.n_w {
        for u in 0..m.n_pools() {
            let pu = m.pools.p_u_given_w.get(w, u);
            let t = m.choices(u)[map.assignment[u]].dataset;
            let row = erm_row(&m.problem, &m.selections.datasets[t]);
            for (h, a) in row.iter().enumerate() {
                if m.problem.distortion[w][h] > d {
                    eps += m.problem.p_w.get(w) * pu * a;
                }
            }
        }
    }
    eps
}

#[test]
fn excess_extremes() {
    let m = model(&noisy_bit());
    let s = SelectionMap::new(&m, vec![0; m.n_pools()]).unwrap().kernel(&m).unwrap();
    assert_eq!(exact_excess_probability(&m, &s, 1.0, 2, Budget::default()).unwrap().eps, 0.0);
    let r = exact_excess_probability(&m, &s, 0.0, 2, Budget::default()).unwrap();
    assert!((r.eps - 1.0).abs() < 1e-12);
}

#[test]
fn excess_matches_atom_walk() {
    let m = model(&noisy_bit());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..30 {
        let map = random_map(&m, &mut rng);
        let k = map.kernel(&m).unwrap();
        for d in [0.1, 0.2, 0.5, 0.79] {
            let e = exact_excess_probability(&m, &k, d, 1, Budget::default()).unwrap().eps;
            assert!((e - atom_walk(&m, &map, d)).abs() < 1e-12);
        }
    }
}

#[test]
fn excess_budget_suggests_monte_carlo() {
    let m = model(&noisy_bit());
    let k = SelectionMap::new(&m, vec![0; m.n_pools()]).unwrap().kernel(&m).unwrap();
    assert!(matches!(exact_excess_probability(&m, &k, 0.3, 40, Budget::default()), Err(Error::Budget { .. })));
}

#[test]
fn map_ids_are_mixed_radix() {
    let m = model(&noisy_bit());
    let mut seen = 0u128;
    for_each_map(&m, Budget::MAPS, |d| {
        assert_eq!(SelectionMap::new(&m, d.to_vec()).unwrap().id(&m), seen);
        seen += 1;
    })
    .unwrap();
    assert_eq!(seen, map_count(&m));
}

#[test]
fn label_everything_has_single_map() {
    let p = Problem::compile(&noisy_bit()).unwrap();
    let r = enumerate_selections(&p, &[2], &[0.3], Budget::MAPS).unwrap();
    assert_eq!(r.per_n[0].maps, 1);
}

#[test]
fn single_hypothesis_makes_selection_irrelevant() {
    let mut inst = noisy_bit();
    inst.h_alphabet.truncate(1);
    inst.hypotheses.truncate(1);
    let p = Problem::compile(&inst).unwrap();
    let r = enumerate_selections(&p, &[1, 2], &[0.1, 0.5], Budget::MAPS).unwrap();
    assert_eq!(r.per_n[0].min_excess_prob, r.per_n[1].min_excess_prob);
}

#[test]
fn enumeration_minimum_agrees_with_separable_minimum() {
    let p = Problem::compile(&noisy_bit_asymmetric()).unwrap();
    let ds = [0.2, 0.3, 0.5];
    let r = enumerate_selections(&p, &[1], &ds, Budget::MAPS).unwrap();
    let m = Model::build(p, Some(1), Budget::default()).unwrap();
    for (i, &d) in ds.iter().enumerate() {
        let sep: f64 = (0..m.n_pools())
            .map(|u| {
                (0..m.choices(u).len())
                    .map(|c| {
                        (0..m.problem.n_w)
                            .map(|w| {
                                let t = m.choices(u)[c].dataset;
                                m.problem.p_w.get(w)
                                    * m.pools.p_u_given_w.get(w, u)
                                    * m.algo
                                        .row(t)
                                        .iter()
                                        .enumerate()
                                        .filter(|(h, _)| m.problem.distortion[w][*h] > d)
                                        .map(|(_, a)| a)
                                        .sum::<f64>()
                            })
                            .sum::<f64>()
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .sum();
        assert!((r.per_n[0].min_excess_prob[i] - sep).abs() < 1e-12);
    }
}

#[test]
fn n_star_monotone() {
    let p = Problem::compile(&noisy_bit()).unwrap();
    let ds = [0.15, 0.2, 0.25, 0.3];
    let r = enumerate_selections(&p, &[1, 2], &ds, Budget::MAPS).unwrap();
    let ns = |di: usize, e: f64| r.n_star(di, e).unwrap_or(usize::MAX);
    for di in 0..ds.len() {
        for e in [0.1, 0.3, 0.5, 0.9] {
            if di + 1 < ds.len() {
                assert!(ns(di + 1, e) <= ns(di, e));
            }
            assert!(ns(di, 0.95) <= ns(di, e));
        }
    }
    for e in &r.per_n {
        assert!(e.min_excess_prob.windows(2).all(|w| w[1] <= w[0]));
    }
}

#[test]
fn deterministic_maps_beat_random_kernels() {
    let m = model(&noisy_bit_asymmetric());
    let d = 0.3;
    let r = enumerate_selections(&m.problem, &[1], &[d], Budget::MAPS).unwrap();
    let best = r.per_n[0].min_excess_prob[0];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let rows: Vec<Vec<f64>> = (0..m.n_pools())
            .map(|u| {
                let v: Vec<f64> = (0..m.choices(u).len()).map(|_| rng.random::<f64>() + 1e-3).collect();
                let s: f64 = v.iter().sum();
                v.into_iter().map(|x| x / s).collect()
            })
            .collect();
        let k = m.selection_kernel(&rows).unwrap();
        assert!(exact_excess_probability(&m, &k, d, 1, Budget::default()).unwrap().eps >= best - 1e-12);
    }
}

#[test]
fn converse_holds_for_every_map() {
    let inst = noisy_bit();
    let m = model(&inst);
    let c = sweep_lambda(&m, &default_lambda_grid(), &SolverConfig::default()).unwrap();
    let d = 0.5 * (c.d_min + c.d_max);
    let a = analyze_at(&m, &c, d, &SolverConfig::default()).unwrap();
    for n in [1, 2] {
        let mn = Model::build(m.problem.clone(), Some(n), Budget::default()).unwrap();
        for b in [1.0, 2.0] {
            let bound = theorem1_epsilon_bound(&a.tilted, 1, n, b).unwrap().eps_lower;
            for_each_map(&mn, Budget::MAPS, |digits| {
                let map = SelectionMap::new(&mn, digits.to_vec()).unwrap();
                let e = exact_excess_probability(&mn, &map.kernel(&mn).unwrap(), d, 1, Budget::default()).unwrap();
                assert!(e.eps >= bound);
            })
            .unwrap();
        }
    }
}

#[test]
fn wilson_interval_bounds() {
    let (lo, hi) = wilson_interval(0, 100);
    assert_eq!(lo, 0.0);
    assert!(hi > 0.0 && hi < 0.05);
    let (lo, hi) = wilson_interval(50, 100);
    assert!(lo < 0.5 && hi > 0.5 && lo >= 0.0 && hi <= 1.0);
}

fn sim(m: &Model, strategy: Strategy, k: usize, trials: usize, seed: u64, d: f64, s: Option<&StochKernel>) -> SimReport {
    let cfg = SimConfig { k, trials, seed, d, strategy, learner: LearnerScope::PerLetter };
    simulate_block(m, &cfg, s).unwrap()
}

#[test]
fn simulation_is_reproducible() {
    let m = model(&noisy_bit());
    let a = sim(&m, Strategy::Random, 10, 500, 42, 0.3, None);
    let b = sim(&m, Strategy::Random, 10, 500, 42, 0.3, None);
    assert_eq!(a.distortions, b.distortions);
    let mut x = Vec::new();
    let mut y = Vec::new();
    write_sim_csv(&[a], &mut x, "h").unwrap();
    write_sim_csv(&[b], &mut y, "h").unwrap();
    assert_eq!(x, y);
    let c = sim(&m, Strategy::Random, 10, 500, 43, 0.3, None);
    assert_ne!(c.distortions, sim(&m, Strategy::Random, 10, 500, 42, 0.3, None).distortions);
}

#[test]
fn optimal_strategy_needs_a_kernel() {
    let m = model(&noisy_bit());
    let cfg = SimConfig { k: 2, trials: 2, seed: 0, d: 0.3, strategy: Strategy::PerLetterOptimal, learner: LearnerScope::PerLetter };
    assert!(matches!(simulate_block(&m, &cfg, None), Err(Error::Dependency(_))));
}

#[test]
fn monte_carlo_matches_exact_excess() {
    let m = model(&noisy_bit_asymmetric());
    let c = sweep_lambda(&m, &default_lambda_grid(), &SolverConfig::default()).unwrap();
    let d = 0.5 * (c.d_min + c.d_max);
    let t = solve_at_distortion(&m, &c, d, &SolverConfig::default()).unwrap();
    let s = &t.point.selection_kernel;
    for k in [1, 2] {
        let exact = exact_excess_probability(&m, s, d, k, Budget::default()).unwrap().eps;
        let r = sim(&m, Strategy::PerLetterOptimal, k, 10_000, 9, d, Some(s));
        let width = r.wilson_hi - r.wilson_lo;
        assert!((r.empirical_excess_prob - exact).abs() <= 3.0 * width, "k={k}: {} vs {exact}", r.empirical_excess_prob);
    }
}

#[test]
fn label_all_erm_concentrates() {
    let m = model(&noisy_bit_marginal());
    let eps: Vec<f64> = [100, 1000]
        .iter()
        .map(|&k| {
            let cfg = SimConfig { k, trials: 2_000, seed: 5, d: 0.25, strategy: Strategy::LabelAll, learner: LearnerScope::Pooled };
            simulate_block(&m, &cfg, None).unwrap().empirical_excess_prob
        })
        .collect();
    assert!(eps[1] <= eps[0]);
    assert!(eps[1] < 0.01);
}

#[test]
fn quantile_is_smallest_meeting_threshold() {
    let m = model(&noisy_bit());
    let r = sim(&m, Strategy::GreedyMinDbar, 7, 1000, 1, 0.3, None);
    for eps in [0.05, 0.1, 0.5] {
        let q = r.distortion_quantile(eps);
        let above = r.distortions.iter().filter(|&&x| x > q).count() as f64 / 1000.0;
        assert!(above <= eps);
        let below = r.distortions.iter().cloned().filter(|&x| x < q).fold(f64::MIN, f64::max);
        if below > f64::MIN {
            let above2 = r.distortions.iter().filter(|&&x| x > below).count() as f64 / 1000.0;
            assert!(above2 > eps);
        }
    }
}

#[test]
fn efron_stein_constant_learner_is_zero() {
    let mut p = Problem::compile(&noisy_bit_marginal()).unwrap();
    p.algorithm = Algorithm::Gibbs { beta: 0.0 };
    for r in efron_stein_check(&p, 2, Budget::MAPS).unwrap() {
        assert!(r.lhs.abs() < 1e-15 && r.rhs.abs() < 1e-15);
    }
}

#[test]
fn efron_stein_holds_for_erm_and_gibbs() {
    for (kind, beta) in [(AlgorithmKind::Erm, None), (AlgorithmKind::Gibbs, Some(1.0))] {
        let mut inst = noisy_bit_marginal();
        inst.algorithm.kind = kind;
        inst.algorithm.beta = beta;
        let p = Problem::compile(&inst).unwrap();
        for k in [1, 2, 3] {
            for r in efron_stein_check(&p, k, Budget::MAPS).unwrap() {
                assert!(r.holds, "{kind:?} k={k}: {} > {}", r.lhs, r.rhs);
            }
        }
    }
}

#[test]
fn efron_stein_single_sample_is_equality() {
    // With one sample, resampling it gives exactly twice the variance.
    let p = Problem::compile(&noisy_bit_marginal()).unwrap();
    let r = efron_stein_check(&p, 1, Budget::MAPS).unwrap()[0];
    assert!((r.lhs - r.rhs).abs() < 1e-12);
}
