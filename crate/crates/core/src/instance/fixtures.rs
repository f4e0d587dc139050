//! Small reference instances used by tests, examples and the CLI.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::spec::*;

fn syms(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn map(ys: &[&str]) -> HypothesisSpec {
    HypothesisSpec::Map(syms(ys))
}

/// Two sub-distributions, `x = w`, labels correct with probability 0.8,
/// identity and flipped predictors, ERM, pools of two, one label.
pub fn noisy_bit() -> ProblemInstance {
    noisy_bit_with(0.8, 0.8)
}

/// As [`noisy_bit`] with label accuracy 0.6 at `x = 0` and 0.9 at `x = 1`.
pub fn noisy_bit_asymmetric() -> ProblemInstance {
    noisy_bit_with(0.6, 0.9)
}

fn noisy_bit_with(acc0: f64, acc1: f64) -> ProblemInstance {
    ProblemInstance {
        x_alphabet: syms(&["0", "1"]),
        y_alphabet: syms(&["0", "1"]),
        w_alphabet: syms(&["0", "1"]),
        h_alphabet: syms(&["id", "flip"]),
        p_w: vec![0.5, 0.5],
        p_x_given_w: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        p_y_given_x: vec![vec![acc0, 1.0 - acc0], vec![1.0 - acc1, acc1]],
        hypotheses: vec![map(&["0", "1"]), map(&["1", "0"])],
        algorithm: AlgorithmSpec {
            kind: AlgorithmKind::Erm,
            explicit_table: None,
            beta: None,
        },
        loss: LossSpec::ZeroOne,
        distortion_mode: DistortionMode::ExpectedLoss,
        m: 2,
        b: Some(2.0),
        n: Some(1),
        selection_mode: SelectionMode::FixedN,
    }
}

/// Single sub-distribution with uniform `x` and the same noisy labels,
/// pools of one sample.
pub fn noisy_bit_marginal() -> ProblemInstance {
    ProblemInstance {
        w_alphabet: syms(&["*"]),
        p_w: vec![1.0],
        p_x_given_w: vec![vec![0.5, 0.5]],
        m: 1,
        n: Some(1),
        ..noisy_bit()
    }
}

/// Every single-sample dataset maps to its own hypothesis, so the learner is
/// a relabelling of the selected dataset.
pub fn identity_learner() -> ProblemInstance {
    let row = |x: &str, y: &str, h: usize| {
        let mut probs = vec![0.0; 4];
        probs[h] = 1.0;
        ExplicitRow {
            dataset: vec![[x.to_string(), y.to_string()]],
            probs,
        }
    };
    ProblemInstance {
        x_alphabet: syms(&["0", "1"]),
        y_alphabet: syms(&["0", "1"]),
        w_alphabet: syms(&["a", "b"]),
        h_alphabet: syms(&["00", "01", "10", "11"]),
        p_w: vec![0.4, 0.6],
        p_x_given_w: vec![vec![0.7, 0.3], vec![0.2, 0.8]],
        p_y_given_x: vec![vec![0.8, 0.2], vec![0.3, 0.7]],
        hypotheses: vec![map(&["0", "0"]), map(&["0", "1"]), map(&["1", "0"]), map(&["1", "1"])],
        algorithm: AlgorithmSpec {
            kind: AlgorithmKind::Explicit,
            explicit_table: Some(vec![row("0", "0", 1), row("0", "1", 2), row("1", "0", 0), row("1", "1", 3)]),
            beta: None,
        },
        loss: LossSpec::ZeroOne,
        distortion_mode: DistortionMode::ExpectedLoss,
        m: 2,
        b: Some(2.0),
        n: Some(1),
        selection_mode: SelectionMode::FixedN,
    }
}

fn random_dist(rng: &mut ChaCha8Rng, n: usize, floor: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| floor + rng.random::<f64>()).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / s).collect()
}

/// Random binary-alphabet instance with `|W| <= 3`, `m <= 2`, `|H| <= 4`,
/// ERM or Gibbs learner.
pub fn random_tiny(seed: u64) -> ProblemInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_w = rng.random_range(1..=3);
    let n_h = rng.random_range(2..=4);
    let m = rng.random_range(1..=2);
    let n = rng.random_range(1..=m);
    let all_maps = [["0", "0"], ["0", "1"], ["1", "0"], ["1", "1"]];
    let mut hypotheses = Vec::new();
    for h in 0..n_h {
        if rng.random_bool(0.5) {
            hypotheses.push(map(&all_maps[(h + seed as usize) % 4]));
        } else {
            hypotheses.push(HypothesisSpec::Table((0..2).map(|_| random_dist(&mut rng, 2, 0.05)).collect()));
        }
    }
    let gibbs = rng.random_bool(0.5);
    ProblemInstance {
        x_alphabet: syms(&["0", "1"]),
        y_alphabet: syms(&["0", "1"]),
        w_alphabet: (0..n_w).map(|w| format!("w{w}")).collect(),
        h_alphabet: (0..n_h).map(|h| format!("h{h}")).collect(),
        p_w: random_dist(&mut rng, n_w, 0.2),
        p_x_given_w: (0..n_w).map(|_| random_dist(&mut rng, 2, 0.0)).collect(),
        p_y_given_x: (0..2).map(|_| random_dist(&mut rng, 2, 0.05)).collect(),
        hypotheses,
        algorithm: AlgorithmSpec {
            kind: if gibbs { AlgorithmKind::Gibbs } else { AlgorithmKind::Erm },
            explicit_table: None,
            beta: gibbs.then(|| 0.5 + 2.0 * rng.random::<f64>()),
        },
        loss: LossSpec::ZeroOne,
        distortion_mode: DistortionMode::ExpectedLoss,
        m,
        b: None,
        n: Some(n),
        selection_mode: SelectionMode::FixedN,
    }
}
