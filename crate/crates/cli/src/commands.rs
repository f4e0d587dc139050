use std::f64::consts::LN_2;
use std::path::{Path, PathBuf};

use anyhow::Context;
use poolrate_core::converse::{
    theorem1_report, theorem2_rate_bound, theorem3_distortion_bound, write_converse_csv, ConverseReport, RateQuery,
    Variant,
};
use poolrate_core::dispersion::{analyze_at, PointAnalysis};
use poolrate_core::instance::Problem;
use poolrate_core::oracle::{
    enumerate_selections, exact_excess_probability, for_each_map, map_count, simulate_block, write_sim_csv,
    EnumerationReport, LearnerScope, NEntry, SelectionMap, SimConfig, SimReport, Strategy,
};
use poolrate_core::rd::{default_lambda_grid, solve_at_distortion, sweep_lambda, RDCurve, SolverConfig};
use poolrate_core::{Budget, Error, Model};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::load::{load_instance, Loaded};
use crate::output::Run;
use crate::svg::{Chart, Series};
use crate::{Command, Common, Level};

const DEFAULT_OUT: &str = "poolrate-out";
const KERNEL_FILE: &str = "selection_kernel.json";

struct Budgets {
    pools: Budget,
    maps: Budget,
}

/// `POOLRATE_BUDGET` replaces both enumeration budgets.
fn budgets() -> anyhow::Result<Budgets> {
    match std::env::var("POOLRATE_BUDGET") {
        Ok(v) => {
            let b: u128 = v
                .trim()
                .parse()
                .map_err(|_| Error::Domain(format!("POOLRATE_BUDGET must be a positive integer, got {v:?}")))?;
            Ok(Budgets { pools: Budget(b), maps: Budget(b) })
        }
        Err(_) => Ok(Budgets { pools: Budget::POOLS, maps: Budget::MAPS }),
    }
}

struct Ctx {
    loaded: Loaded,
    budgets: Budgets,
    model: Model,
    out: PathBuf,
    solver: SolverConfig,
}

impl Ctx {
    fn new(common: &Common, n: Option<usize>) -> anyhow::Result<Ctx> {
        let budgets = budgets()?;
        let loaded = load_instance(&common.instance, budgets.pools)?;
        let model = Model::build(Problem::compile(&loaded.instance)?, n, budgets.pools)?;
        Ok(Ctx {
            loaded,
            budgets,
            model,
            out: common.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
            solver: SolverConfig::default(),
        })
    }

    fn curve(&self) -> anyhow::Result<RDCurve> {
        Ok(sweep_lambda(&self.model, &default_lambda_grid(), &self.solver)?)
    }

    fn run(&self, command: &str, mut config: Value, seed: Option<u64>) -> anyhow::Result<Run> {
        config["command"] = json!(command);
        config["n"] = json!(self.model.n);
        config["solver"] = serde_json::to_value(self.solver)?;
        Run::start(&self.out, command, &self.loaded, config, seed)
    }

    fn b_bits(&self) -> f64 {
        self.model.problem.b_bits
    }
}

fn resolve(level: Level, curve: &RDCurve) -> f64 {
    match level {
        Level::Value(d) => d,
        Level::Mid => 0.5 * (curve.d_min + curve.d_max),
    }
}

fn done(run: Run) -> anyhow::Result<()> {
    let path = run.finish()?;
    println!("manifest: {}", path.display());
    Ok(())
}

pub fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Validate { common } => validate(&common),
        Command::RdSweep { common, n, lambdas } => rd_sweep(&Ctx::new(&common, n)?, lambdas),
        Command::RdSolve { common, n, target_d } => rd_solve(&Ctx::new(&common, n)?, target_d),
        Command::Tilted { common, n, d } => tilted(&Ctx::new(&common, n)?, d),
        Command::Dispersion { common, n, d } => dispersion(&Ctx::new(&common, n)?, d),
        Command::Converse { common, theorem, k, n, d, eps, rate, variant } => {
            converse(&Ctx::new(&common, n)?, theorem, k, d, eps, rate, &variant)
        }
        Command::Oracle { common, n, k, d } => oracle(&Ctx::new(&common, None)?, &n, k, &d),
        Command::Simulate { common, k, trials, seed, strategy, d, n, learner, kernel } => {
            let ctx = Ctx::new(&common, n)?;
            let sim = SimArgs { k, trials, seed, strategy: strategy.parse()?, d, learner: parse_learner(&learner)? };
            simulate(&ctx, &sim, kernel.as_deref())
        }
        Command::Report { common, n, d, eps, k_grid, trials, seed } => {
            report(&Ctx::new(&common, n)?, d, eps, &k_grid, trials, seed)
        }
    }
}

fn validate(common: &Common) -> anyhow::Result<()> {
    let budgets = budgets()?;
    let loaded = load_instance(&common.instance, budgets.pools)?;
    print!("{}", loaded.diagnostics);
    println!("sha256 {}", loaded.sha256);
    if let Some(out) = &common.out {
        let run = Run::start(out, "validate", &loaded, json!({ "command": "validate" }), None)?;
        done(run)?;
    }
    Ok(())
}

fn envelope_csv(curve: &RDCurve) -> String {
    let mut s = String::from("distortion,rate_nats,rate_bits\n");
    for (d, r) in &curve.envelope {
        s.push_str(&format!("{d},{r},{}\n", r / LN_2));
    }
    s
}

fn curve_chart(curve: &RDCurve) -> Chart {
    Chart {
        title: "Rate-distortion curve".into(),
        x_label: "distortion d".into(),
        y_label: "R(d) [bits]".into(),
        series: vec![
            Series::line("lower envelope", curve.envelope.iter().map(|&(d, r)| (d, r / LN_2)).collect()),
            Series::markers("solved points", curve.points.iter().map(|p| (p.avg_distortion, p.rate / LN_2)).collect()),
        ],
    }
}

fn write_curve(run: &mut Run, curve: &RDCurve) -> anyhow::Result<()> {
    run.csv("rd_curve.csv", |b| curve.write_csv(b))?;
    run.csv("rd_envelope.csv", |b| {
        b.extend_from_slice(envelope_csv(curve).as_bytes());
        Ok(())
    })?;
    run.write("rd_curve.svg", curve_chart(curve).render().as_bytes())
}

fn rd_sweep(ctx: &Ctx, lambdas: Option<Vec<f64>>) -> anyhow::Result<()> {
    let grid = lambdas.unwrap_or_else(default_lambda_grid);
    let curve = sweep_lambda(&ctx.model, &grid, &ctx.solver)?;
    let mut run = ctx.run("rd-sweep", json!({ "lambdas": grid }), None)?;
    write_curve(&mut run, &curve)?;
    println!(
        "d in [{}, {}], R from {} to {} nats, {} points",
        curve.d_min,
        curve.d_max,
        curve.max_rate(),
        curve.rate_floor,
        curve.points.len()
    );
    done(run)
}

/// Solved selection kernel handed from `rd-solve` to `simulate`.
#[derive(Serialize, Deserialize)]
struct KernelFile {
    instance_sha256: String,
    n: Option<usize>,
    target_d: f64,
    lambda: f64,
    /// Per pool, probabilities over that pool's feasible choices.
    rows: Vec<Vec<f64>>,
}

fn rd_solve(ctx: &Ctx, target: Level) -> anyhow::Result<()> {
    let curve = ctx.curve()?;
    let d = resolve(target, &curve);
    let t = solve_at_distortion(&ctx.model, &curve, d, &ctx.solver)?;
    let mut run = ctx.run("rd-solve", json!({ "target_d": d }), None)?;
    let p = &t.point;
    let mix = t.mix_alpha.map_or(String::new(), |a| a.to_string());
    let row = format!(
        "target_d,lambda,rate_nats,rate_bits,avg_distortion,mix_alpha,bisections\n{d},{},{},{},{},{mix},{}\n",
        p.lambda,
        p.rate,
        p.rate / LN_2,
        p.avg_distortion,
        t.bisections
    );
    run.csv("rd_solve.csv", |b| {
        b.extend_from_slice(row.as_bytes());
        Ok(())
    })?;
    let mut kern = String::from("pool,dataset,prob\n");
    for u in 0..ctx.model.n_pools() {
        for (c, &s) in ctx.model.choices(u).iter().zip(&p.rows[u]) {
            if s > 0.0 {
                kern.push_str(&format!("{u},{},{s}\n", c.dataset));
            }
        }
    }
    run.csv("selection_kernel.csv", |b| {
        b.extend_from_slice(kern.as_bytes());
        Ok(())
    })?;
    let file = KernelFile {
        instance_sha256: ctx.loaded.sha256.clone(),
        n: ctx.model.n,
        target_d: d,
        lambda: p.lambda,
        rows: p.rows.clone(),
    };
    run.write(KERNEL_FILE, &serde_json::to_vec_pretty(&file)?)?;
    println!("d = {d}: R = {} nats, lambda = {}", p.rate, p.lambda);
    done(run)
}

fn analysis(ctx: &Ctx, d: Level) -> anyhow::Result<(RDCurve, f64, PointAnalysis)> {
    let curve = ctx.curve()?;
    let d = resolve(d, &curve);
    let a = analyze_at(&ctx.model, &curve, d, &ctx.solver)?;
    Ok((curve, d, a))
}

fn tilted_csv(a: &PointAnalysis) -> String {
    let t = &a.tilted;
    let mut s = String::from("w,u,h,j_nats,mass,lambda_star,d_center\n");
    for ((w, u, h), j, p) in &t.values {
        s.push_str(&format!("{w},{u},{h},{j},{p},{},{}\n", t.lambda_star, t.d_center));
    }
    s
}

fn tilted(ctx: &Ctx, d: Level) -> anyhow::Result<()> {
    let (_, d, a) = analysis(ctx, d)?;
    let mut run = ctx.run("tilted", json!({ "d": d }), None)?;
    let s = tilted_csv(&a);
    run.csv("tilted.csv", |b| {
        b.extend_from_slice(s.as_bytes());
        Ok(())
    })?;
    println!("mean {} nats over {} atoms, lambda* = {}", a.tilted.mean(), a.tilted.values.len(), a.tilted.lambda_star);
    done(run)
}

fn dispersion(ctx: &Ctx, d: Level) -> anyhow::Result<()> {
    let (_, d, a) = analysis(ctx, d)?;
    let mut run = ctx.run("dispersion", json!({ "d": d }), None)?;
    run.csv("dispersion.csv", |b| a.report.write_csv(b))?;
    let r = &a.report;
    println!("V = {} (V_in {}, V_bet {}) flags [{}]", r.v, r.v_in, r.v_bet, r.flags());
    done(run)
}

fn need<T>(v: Option<T>, flag: &str, theorem: u8) -> anyhow::Result<T> {
    v.ok_or_else(|| Error::Domain(format!("theorem {theorem} needs --{flag}")).into())
}

fn converse(
    ctx: &Ctx,
    theorem: u8,
    k: usize,
    d: Option<Level>,
    eps: Option<f64>,
    rate: Option<f64>,
    variant: &str,
) -> anyhow::Result<()> {
    let variant: Variant = variant.parse()?;
    let m = ctx.model.problem.m;
    let (report, config) = match theorem {
        1 => {
            let n = need(ctx.model.n, "n", 1)?;
            let (_, d, a) = analysis(ctx, need(d, "d", 1)?)?;
            let r = theorem1_report(&a.tilted, k, m, n, ctx.b_bits())?;
            (r, json!({ "theorem": 1, "k": k, "d": d }))
        }
        2 => {
            let eps = need(eps, "eps", 2)?;
            let (curve, d, a) = analysis(ctx, need(d, "d", 2)?)?;
            let q = RateQuery { k, m, d, eps, variant, b_bits: ctx.b_bits() };
            let r = theorem2_rate_bound(&curve, &a.report, &q)?;
            (r, json!({ "theorem": 2, "k": k, "d": d, "eps": eps, "variant": variant.as_str() }))
        }
        _ => {
            let eps = need(eps, "eps", 3)?;
            let rate = need(rate, "rate", 3)?;
            let curve = ctx.curve()?;
            let v_at = |d: f64| analyze_at(&ctx.model, &curve, d, &ctx.solver).map(|p| p.report.v);
            let r = theorem3_distortion_bound(&curve, k, m, rate, eps, v_at)?;
            (r, json!({ "theorem": 3, "k": k, "rate": rate, "eps": eps }))
        }
    };
    let mut run = ctx.run("converse", config, None)?;
    run.csv("converse.csv", |b| write_converse_csv(std::slice::from_ref(&report), b))?;
    print!("theorem {theorem} bound {}", report.bound_value);
    if let Some(l) = report.label_bound {
        print!(" (at least {l} labels)");
    }
    if !report.flags.is_empty() {
        print!(" [{}]", report.flags.join(";"));
    }
    println!();
    done(run)
}

/// Exhaustive per-letter maps scored on `k`-letter blocks.
fn block_search(problem: &Problem, ns: &[usize], ds: &[f64], k: usize, budgets: &Budgets) -> anyhow::Result<EnumerationReport> {
    let mut ns = ns.to_vec();
    ns.sort_unstable();
    ns.dedup();
    let mut per_n = Vec::with_capacity(ns.len());
    for &n in &ns {
        let model = Model::build(problem.clone(), Some(n), budgets.pools)?;
        let letter = (problem.n_w * problem.n_h) as u128;
        let cells = map_count(&model).saturating_mul(letter.saturating_pow(k as u32)).saturating_mul(ds.len() as u128);
        budgets.maps.check("block outcomes over all maps (use simulate for larger k)", cells)?;
        let mut best = vec![(f64::INFINITY, 0u128); ds.len()];
        let mut best_avg = f64::INFINITY;
        let mut failure = None;
        let mut id = 0u128;
        let maps = for_each_map(&model, budgets.maps, |digits| {
            if failure.is_some() {
                return;
            }
            let mut run = || -> poolrate_core::Result<()> {
                let kernel = SelectionMap::new(&model, digits.to_vec())?.kernel(&model)?;
                for (b, &d) in best.iter_mut().zip(ds) {
                    let e = exact_excess_probability(&model, &kernel, d, k, budgets.maps)?;
                    if e.eps < b.0 {
                        *b = (e.eps, id);
                    }
                    best_avg = best_avg.min(e.avg_distortion);
                }
                Ok(())
            };
            if let Err(e) = run() {
                failure = Some(e);
            }
            id += 1;
        })?;
        if let Some(e) = failure {
            return Err(e.into());
        }
        per_n.push(NEntry {
            n,
            maps,
            min_excess_prob: best.iter().map(|b| b.0).collect(),
            argmin_map: best.iter().map(|b| b.1).collect(),
            min_avg_distortion: best_avg,
        });
    }
    Ok(EnumerationReport { d_grid: ds.to_vec(), per_n })
}

fn oracle(ctx: &Ctx, ns: &[usize], k: usize, levels: &[Level]) -> anyhow::Result<()> {
    if k == 0 {
        return Err(Error::Domain("k must be positive".into()).into());
    }
    let curve = if levels.contains(&Level::Mid) { Some(ctx.curve()?) } else { None };
    let ds: Vec<f64> = levels
        .iter()
        .map(|&l| match (&curve, l) {
            (Some(c), l) => resolve(l, c),
            (None, Level::Value(d)) => d,
            (None, Level::Mid) => unreachable!(),
        })
        .collect();
    let rep = if k == 1 {
        enumerate_selections(&ctx.model.problem, ns, &ds, ctx.budgets.maps)?
    } else {
        block_search(&ctx.model.problem, ns, &ds, k, &ctx.budgets)?
    };
    let mut run = ctx.run("oracle", json!({ "n_grid": ns, "k": k, "d_grid": ds }), None)?;
    let hash = run.hash().to_string();
    run.csv("enumeration.csv", |b| rep.write_csv(b, &hash))?;
    for e in &rep.per_n {
        println!("n = {}: {} maps, min excess {:?}", e.n, e.maps, e.min_excess_prob);
    }
    done(run)
}

fn parse_learner(s: &str) -> anyhow::Result<LearnerScope> {
    match s {
        "per-letter" => Ok(LearnerScope::PerLetter),
        "pooled" => Ok(LearnerScope::Pooled),
        other => Err(Error::Domain(format!("unknown learner scope {other:?}")).into()),
    }
}

struct SimArgs {
    k: usize,
    trials: usize,
    seed: u64,
    strategy: Strategy,
    d: Level,
    learner: LearnerScope,
}

fn load_kernel(ctx: &Ctx, explicit: Option<&Path>) -> anyhow::Result<poolrate_core::Kernel> {
    let path = explicit.map(Path::to_path_buf).unwrap_or_else(|| ctx.out.join(KERNEL_FILE));
    if !path.exists() {
        return Err(Error::Dependency(format!(
            "per-letter-optimal needs a solved selection kernel; run `rd-solve` into {} first or pass --kernel",
            ctx.out.display()
        ))
        .into());
    }
    let bytes = std::fs::read(&path).with_context(|| format!("cannot read {}", path.display()))?;
    let file: KernelFile =
        serde_json::from_slice(&bytes).map_err(|e| Error::Dependency(format!("{}: {e}", path.display())))?;
    if file.instance_sha256 != ctx.loaded.sha256 || file.n != ctx.model.n {
        return Err(Error::Dependency(format!("{} was solved for a different instance or n", path.display())).into());
    }
    ctx.model.selection_kernel(&file.rows).map_err(|e| Error::Dependency(format!("{}: {e}", path.display())).into())
}

fn simulate(ctx: &Ctx, a: &SimArgs, kernel: Option<&Path>) -> anyhow::Result<()> {
    let selection = match a.strategy {
        Strategy::PerLetterOptimal => Some(load_kernel(ctx, kernel)?),
        _ => None,
    };
    let d = match a.d {
        Level::Value(d) => d,
        Level::Mid => resolve(Level::Mid, &ctx.curve()?),
    };
    let cfg = SimConfig { k: a.k, trials: a.trials, seed: a.seed, d, strategy: a.strategy, learner: a.learner };
    let rep = simulate_block(&ctx.model, &cfg, selection.as_ref())?;
    let mut run = ctx.run("simulate", serde_json::to_value(cfg)?, Some(a.seed))?;
    let hash = run.hash().to_string();
    run.csv("simulation.csv", |b| write_sim_csv(std::slice::from_ref(&rep), b, &hash))?;
    println!(
        "excess {} of {} (Wilson [{}, {}]), rate {} bits",
        rep.excess_count, a.trials, rep.wilson_lo, rep.wilson_hi, rep.achieved_rate_bits
    );
    done(run)
}

fn report(ctx: &Ctx, d: Level, eps: f64, k_grid: &[usize], trials: usize, seed: u64) -> anyhow::Result<()> {
    let (curve, d, a) = analysis(ctx, d)?;
    let m = ctx.model.problem.m;
    let b = ctx.b_bits();
    let mut k_grid = k_grid.to_vec();
    k_grid.sort_unstable();
    k_grid.dedup();
    let config = json!({ "d": d, "eps": eps, "k_grid": k_grid, "trials": trials });
    let mut run = ctx.run("report", config, Some(seed))?;
    let hash = run.hash().to_string();

    write_curve(&mut run, &curve)?;
    run.csv("dispersion.csv", |w| a.report.write_csv(w))?;
    let tc = tilted_csv(&a);
    run.csv("tilted.csv", |w| {
        w.extend_from_slice(tc.as_bytes());
        Ok(())
    })?;

    let mut bounds: Vec<ConverseReport> = Vec::new();
    for &k in &k_grid {
        for variant in [Variant::Asymptotic, Variant::Explicit] {
            let q = RateQuery { k, m, d, eps, variant, b_bits: b };
            bounds.push(theorem2_rate_bound(&curve, &a.report, &q)?);
        }
    }
    run.csv("converse.csv", |w| write_converse_csv(&bounds, w))?;

    let ns: Vec<usize> = (1..=m).collect();
    let enumeration = enumerate_selections(&ctx.model.problem, &ns, &[d], ctx.budgets.maps)?;
    run.csv("enumeration.csv", |w| enumeration.write_csv(w, &hash))?;

    let theorem1: Vec<ConverseReport> =
        (0..=m).map(|n| theorem1_report(&a.tilted, 1, m, n, b)).collect::<poolrate_core::Result<_>>()?;
    run.csv("theorem1.csv", |w| write_converse_csv(&theorem1, w))?;

    let kernel = &a.solve.point.selection_kernel;
    let mut sims: Vec<SimReport> = Vec::new();
    for &k in &k_grid {
        for strategy in [Strategy::PerLetterOptimal, Strategy::GreedyMinDbar] {
            let cfg = SimConfig { k, trials, seed, d, strategy, learner: LearnerScope::PerLetter };
            sims.push(simulate_block(&ctx.model, &cfg, Some(kernel))?);
        }
    }
    run.csv("simulation.csv", |w| write_sim_csv(&sims, w, &hash))?;

    let bits = |r: &ConverseReport| (r.k as f64, r.bound_value / LN_2);
    let mut rate_series = vec![
        Series::line("asymptotic bound", bounds.iter().filter(|r| r.theorem == 2 && r.variant == Variant::Asymptotic).map(bits).collect()),
        Series::line("explicit bound", bounds.iter().filter(|r| r.variant == Variant::Explicit).map(bits).collect()),
    ];
    for strategy in [Strategy::PerLetterOptimal, Strategy::GreedyMinDbar] {
        let pts: Vec<(f64, f64)> = sims
            .iter()
            .filter(|s| s.config.strategy == strategy && s.empirical_excess_prob <= eps)
            .map(|s| (s.config.k as f64, s.achieved_rate_bits))
            .collect();
        rate_series.push(Series::markers(&format!("{} (meets eps)", strategy.as_str()), pts));
    }
    if let Some(n) = enumeration.n_star(0, eps) {
        rate_series.push(Series::markers("exhaustive n* (k = 1)", vec![(1.0, b * n as f64)]));
    }
    let rate_chart = Chart {
        title: format!("Rate bound at d = {d:.4}, eps = {eps}"),
        x_label: "block length k".into(),
        y_label: "rate [bits per letter]".into(),
        series: rate_series,
    };
    run.write("rate_bound.svg", rate_chart.render().as_bytes())?;

    let eps_chart = Chart {
        title: format!("Excess-probability bound at d = {d:.4}, k = 1"),
        x_label: "labels n".into(),
        y_label: "excess probability".into(),
        series: vec![
            Series::line("lower bound", theorem1.iter().map(|r| (r.n.unwrap_or(0) as f64, r.bound_value)).collect()),
            Series::markers(
                "best deterministic map",
                enumeration.per_n.iter().map(|e| (e.n as f64, e.min_excess_prob[0])).collect(),
            ),
        ],
    };
    run.write("epsilon_bound.svg", eps_chart.render().as_bytes())?;

    println!("d = {d}: R = {} nats, V = {}", a.report.r_check, a.report.v);
    for r in &bounds {
        println!("  k = {:>5} {:<10} rate >= {} nats {}", r.k, r.variant.as_str(), r.bound_value, r.flags.join(";"));
    }
    done(run)
}
