use std::collections::HashMap;
use std::io::Write;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::{build_algorithm_kernel, CanonicalDataset, Model};
use crate::prob::StochKernel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Rows of a solved selection kernel.
    PerLetterOptimal,
    /// Dataset with the smallest expected posterior distortion.
    GreedyMinDbar,
    Random,
    /// Every sample of the pool.
    LabelAll,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::PerLetterOptimal => "per-letter-optimal",
            Strategy::GreedyMinDbar => "greedy-min-dbar",
            Strategy::Random => "random",
            Strategy::LabelAll => "label-all",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-letter-optimal" | "optimal" => Ok(Strategy::PerLetterOptimal),
            "greedy-min-dbar" | "greedy" => Ok(Strategy::GreedyMinDbar),
            "random" => Ok(Strategy::Random),
            "label-all" => Ok(Strategy::LabelAll),
            other => Err(Error::Domain(format!("unknown strategy {other:?}"))),
        }
    }
}

/// Where the learner runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LearnerScope {
    /// One hypothesis per letter from that letter's data.
    PerLetter,
    /// One hypothesis from the union of all letters' data.
    Pooled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    pub k: usize,
    pub trials: usize,
    pub seed: u64,
    /// Excess threshold on the block distortion.
    pub d: f64,
    pub strategy: Strategy,
    pub learner: LearnerScope,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimReport {
    pub config: SimConfig,
    pub excess_count: usize,
    pub empirical_excess_prob: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
    pub empirical_avg_distortion: f64,
    pub labels_per_trial: f64,
    pub achieved_rate_bits: f64,
    pub achieved_rate_nats: f64,
    /// Block distortion per trial, in trial order.
    #[serde(skip)]
    pub distortions: Vec<f64>,
}

/// 95% Wilson score interval.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054;
    let n = trials as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * ((p * (1.0 - p) + z * z / (4.0 * n)) / n).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Independent stream for one trial.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(trial)))
}

fn weighted(w: &[f64]) -> Result<WeightedIndex<f64>> {
    WeightedIndex::new(w).map_err(|e| Error::Distribution {
        name: "sampling weights".into(),
        message: e.to_string(),
    })
}

impl SimReport {
    /// Smallest observed `d` with empirical `P[D > d] <= eps`.
    pub fn distortion_quantile(&self, eps: f64) -> f64 {
        let mut v = self.distortions.clone();
        v.sort_by(f64::total_cmp);
        let t = v.len();
        let allowed = ((eps * t as f64).floor() as usize).min(t - 1);
        v[t - 1 - allowed]
    }

    pub const CSV_HEADER: [&'static str; 15] = [
        "k",
        "trials",
        "seed",
        "strategy",
        "learner",
        "d",
        "excess_count",
        "empirical_excess_prob",
        "wilson_lo",
        "wilson_hi",
        "empirical_avg_distortion",
        "labels_per_trial",
        "achieved_rate_bits",
        "achieved_rate_nats",
        "config_hash",
    ];

    pub fn record(&self, config_hash: &str) -> Vec<String> {
        let c = &self.config;
        vec![
            c.k.to_string(),
            c.trials.to_string(),
            c.seed.to_string(),
            c.strategy.as_str().to_string(),
            match c.learner {
                LearnerScope::PerLetter => "per-letter".into(),
                LearnerScope::Pooled => "pooled".into(),
            },
            c.d.to_string(),
            self.excess_count.to_string(),
            self.empirical_excess_prob.to_string(),
            self.wilson_lo.to_string(),
            self.wilson_hi.to_string(),
            self.empirical_avg_distortion.to_string(),
            self.labels_per_trial.to_string(),
            self.achieved_rate_bits.to_string(),
            self.achieved_rate_nats.to_string(),
            config_hash.to_string(),
        ]
    }
}

pub fn write_sim_csv<W: Write>(reports: &[SimReport], out: W, config_hash: &str) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(SimReport::CSV_HEADER)?;
    for r in reports {
        w.write_record(r.record(config_hash))?;
    }
    w.flush().map_err(|e| Error::Export(e.to_string()))?;
    Ok(())
}

/// Learner rows keyed by dataset, built on first use.
struct LearnerCache<'a> {
    model: &'a Model,
    rows: HashMap<CanonicalDataset, WeightedIndex<f64>>,
}

impl LearnerCache<'_> {
    fn sample<R: Rng>(&mut self, t: &CanonicalDataset, rng: &mut R) -> Result<usize> {
        if !self.rows.contains_key(t) {
            let row = match self.model.selections.dataset_index(t) {
                Some(i) => self.model.algo.row(i).to_vec(),
                None => build_algorithm_kernel(&self.model.problem, std::slice::from_ref(t))?.row(0).to_vec(),
            };
            self.rows.insert(t.clone(), weighted(&row)?);
        }
        Ok(self.rows[t].sample(rng))
    }
}

/// Monte Carlo block coding: `k` i.i.d. letters per trial.
pub fn simulate_block(model: &Model, config: &SimConfig, selection: Option<&StochKernel>) -> Result<SimReport> {
    if config.trials == 0 || config.k == 0 {
        return Err(Error::Domain("trials and k must be positive".into()));
    }
    let p = &model.problem;
    let nu = model.n_pools();
    let w_dist = weighted(p.p_w.weights())?;
    let pool_dists: Vec<WeightedIndex<f64>> = (0..p.n_w)
        .map(|w| weighted(model.pools.p_u_given_w.row(w)))
        .collect::<Result<_>>()?;
    // Per-pool sampler over its choices, for strategies that randomize.
    let choice_dists: Option<Vec<WeightedIndex<f64>>> = match config.strategy {
        Strategy::PerLetterOptimal => {
            let s = selection.ok_or_else(|| Error::Dependency("per-letter-optimal needs a solved selection kernel".into()))?;
            if s.n_in() != nu || s.n_out() != model.selections.datasets.len() {
                return Err(Error::Alphabet("selection kernel does not match the model".into()));
            }
            Some(
                (0..nu)
                    .map(|u| weighted(&model.choices(u).iter().map(|c| s.get(u, c.dataset)).collect::<Vec<_>>()))
                    .collect::<Result<_>>()?,
            )
        }
        Strategy::Random => Some((0..nu).map(|u| weighted(&vec![1.0; model.choices(u).len()])).collect::<Result<_>>()?),
        _ => None,
    };
    let greedy: Vec<usize> = (0..nu)
        .map(|u| {
            (0..model.choices(u).len())
                .min_by(|&a, &b| model.cost[u][a].total_cmp(&model.cost[u][b]))
                .unwrap_or(0)
        })
        .collect();
    let mut cache = LearnerCache {
        model,
        rows: HashMap::new(),
    };
    let kf = config.k as f64;
    let mut distortions = Vec::with_capacity(config.trials);
    let mut labels_total = 0usize;
    let mut excess = 0usize;
    for trial in 0..config.trials {
        let mut rng = trial_rng(config.seed, trial as u64);
        let mut letters = Vec::with_capacity(config.k);
        let mut pooled_samples = Vec::new();
        let mut block = 0.0;
        for _ in 0..config.k {
            let w = w_dist.sample(&mut rng);
            let u = pool_dists[w].sample(&mut rng);
            let t = match config.strategy {
                Strategy::LabelAll => CanonicalDataset::new(model.pools.pools[u].clone()),
                Strategy::GreedyMinDbar => model.selections.datasets[model.choices(u)[greedy[u]].dataset].clone(),
                _ => {
                    let c = choice_dists.as_ref().map(|d| d[u].sample(&mut rng)).unwrap_or(0);
                    model.selections.datasets[model.choices(u)[c].dataset].clone()
                }
            };
            labels_total += t.size();
            match config.learner {
                LearnerScope::PerLetter => {
                    let h = cache.sample(&t, &mut rng)?;
                    block += p.distortion[w][h];
                }
                LearnerScope::Pooled => pooled_samples.extend_from_slice(t.samples()),
            }
            letters.push(w);
        }
        if config.learner == LearnerScope::Pooled {
            let h = cache.sample(&CanonicalDataset::new(pooled_samples), &mut rng)?;
            block = letters.iter().map(|&w| p.distortion[w][h]).sum();
        }
        let dist = block / kf;
        if dist > config.d {
            excess += 1;
        }
        distortions.push(dist);
    }
    let n = config.trials as f64;
    let (lo, hi) = wilson_interval(excess, config.trials);
    let labels = labels_total as f64 / n;
    let rate_bits = p.b_bits * labels / kf;
    Ok(SimReport {
        config: *config,
        excess_count: excess,
        empirical_excess_prob: excess as f64 / n,
        wilson_lo: lo,
        wilson_hi: hi,
        empirical_avg_distortion: distortions.iter().sum::<f64>() / n,
        labels_per_trial: labels,
        achieved_rate_bits: rate_bits,
        achieved_rate_nats: rate_bits * std::f64::consts::LN_2,
        distortions,
    })
}
