use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde_json::json;

use gwo_lab::benchmarks::{run_success_experiment, SuccessExperiment, Variant};
use gwo_lab::criteria::{check_algorithm_condition, failure_report, ConditionReport, CriteriaTrace};
use gwo_lab::csv_io::{self, fmt_f64};
use gwo_lab::gwo::AMode;
use gwo_lab::moments::theory_table;
use gwo_lab::montecarlo::{self, EnsembleConfig};
use gwo_lab::stagnation::{self, StagnationConfig};
use gwo_lab::target::{EpsMode, TargetSet};

use crate::manifest::Manifest;
use crate::{
    BenchmarkArgs, Cli, Command, EnsembleArgs, HittingArgs, SimKind, TheoryArgs, UsageError, VariantChoice,
    EXIT_CHECK_FAILED,
};

pub fn run(cli: Cli, argv: Vec<String>) -> Result<u8> {
    if let Some(n) = cli.workers {
        // a second call in the same process (replay) keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n as usize).build_global();
    }
    let seed = cli.seed;
    match cli.command {
        Command::Theory(args) => theory(args, seed, &argv),
        Command::Sim { kind } => sim(kind, seed, &argv),
        Command::Benchmark(args) => benchmark(args, seed, &argv),
        Command::Hitting(args) => hitting(args, seed, &argv),
        Command::Check { trace } => check(&trace),
        Command::Bound { probabilities } => bound(&probabilities),
        Command::Replay { manifest, out_dir } => replay(&manifest, out_dir),
    }
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn theory(args: TheoryArgs, seed: u64, argv: &[String]) -> Result<u8> {
    if args.r_max < 2 || !args.r_max.is_multiple_of(2) {
        return Err(usage(format!("--r-max must be an even number >= 2, got {}", args.r_max)));
    }
    let rows = theory_table(args.r_max, &args.a_grid)?;
    csv_io::write_theory(io::stdout().lock(), &args.a_grid, &rows)?;
    if let Some(dir) = &args.out_dir {
        ensure_dir(dir)?;
        csv_io::write_theory(create(&dir.join("theory.csv"))?, &args.a_grid, &rows)?;
        let mut m = Manifest::new(
            "theory",
            argv,
            seed,
            json!({ "r_max": args.r_max, "a_grid": args.a_grid }),
        );
        m.outputs.push("theory.csv".into());
        m.write(dir)?;
    }
    Ok(0)
}

fn ensemble_config(args: &EnsembleArgs, seed: u64) -> Result<EnsembleConfig> {
    let a_mode = match args.const_a {
        None => AMode::Scheduled,
        Some(a) if (0.0..=2.0).contains(&a) => AMode::Constant(a),
        Some(a) => return Err(usage(format!("--const-a must lie in [0, 2], got {a}"))),
    };
    let cfg = EnsembleConfig {
        trials: if args.full_scale { 1_000_000 } else { args.trials as usize },
        horizon: args.horizon,
        t_max: args.t_max,
        leaders: montecarlo::draw_leaders(seed, args.center_zero),
        init: (-4.0, 4.0),
        a_mode,
        dimension: 0,
        seed,
    };
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    Ok(cfg)
}

fn sim(kind: SimKind, seed: u64, argv: &[String]) -> Result<u8> {
    let (ensemble, name) = match &kind {
        SimKind::Moments { ensemble, .. } => (ensemble, "sim moments"),
        SimKind::Pdf { ensemble, .. } => (ensemble, "sim pdf"),
        SimKind::Hitprob { ensemble, .. } => (ensemble, "sim hitprob"),
    };
    let cfg = ensemble_config(ensemble, seed)?;
    let dir = ensemble.out_dir.clone();
    ensure_dir(&dir)?;
    let mut outputs = Vec::new();
    let extra = match kind {
        SimKind::Moments { orders, .. } => {
            if orders.is_empty() || orders.contains(&0) {
                return Err(usage("--orders must list positive integers"));
            }
            let series = montecarlo::run_moment_experiment(&cfg, &orders)?;
            csv_io::write_moments(create(&dir.join("moments.csv"))?, &series)?;
            outputs.push("moments.csv".to_string());
            json!({ "orders": orders })
        }
        SimKind::Pdf { snapshots, bins, .. } => {
            if bins < 2 {
                return Err(usage(format!("--bins must be at least 2, got {bins}")));
            }
            if snapshots.iter().any(|&t| t == 0 || t > cfg.t_max) {
                return Err(usage(format!("--snapshots must lie in [1, {}]", cfg.t_max)));
            }
            let snaps = montecarlo::run_pdf_experiment(&cfg, &snapshots, bins)?;
            for s in &snaps {
                let name = format!("pdf_t{}.csv", s.t);
                csv_io::write_pdf(create(&dir.join(&name))?, &s.histogram)?;
                outputs.push(name);
            }
            let stats: Vec<_> = snaps
                .iter()
                .map(|s| json!({ "t": s.t, "mean": s.mean, "std_error": s.std_error, "samples": s.samples }))
                .collect();
            json!({ "snapshots": snapshots, "bins": bins, "snapshot_stats": stats })
        }
        SimKind::Hitprob { lb, ub, .. } => {
            let ub = if ub.is_empty() { lb.iter().map(|l| l + 1.0).collect() } else { ub };
            if lb.len() != ub.len() || lb.is_empty() {
                return Err(usage("--lb and --ub must have the same number of entries"));
            }
            let intervals: Vec<(f64, f64)> = lb.iter().copied().zip(ub.iter().copied()).collect();
            if intervals.iter().any(|(l, u)| !(l < u)) {
                return Err(usage("every interval needs lb < ub"));
            }
            let series = montecarlo::run_hitprob_experiment(&cfg, &intervals)?;
            csv_io::write_hitprob(create(&dir.join("hitprob.csv"))?, &series)?;
            outputs.push("hitprob.csv".to_string());
            json!({ "intervals": intervals })
        }
    };
    let mut m = Manifest::new(name, argv, seed, json!({ "ensemble": cfg, "experiment": extra }));
    m.leaders = Some(cfg.leaders.to_vec());
    m.outputs = outputs;
    m.write(&dir)?;
    for o in &m.outputs {
        println!("{}", dir.join(o).display());
    }
    Ok(0)
}

fn benchmark(args: BenchmarkArgs, seed: u64, argv: &[String]) -> Result<u8> {
    if args.agents == 0 || args.iterations == 0 {
        return Err(usage("--agents and --iterations must be positive"));
    }
    if let Some(e) = args.eps.iter().find(|e| !(**e > 0.0)) {
        return Err(usage(format!("--eps must be positive, got {e}")));
    }
    let variants: &[Variant] = match args.variant {
        VariantChoice::Original => &[Variant::Original],
        VariantChoice::Stagnation => &[Variant::Stagnation],
        VariantChoice::Both => &[Variant::Original, Variant::Stagnation],
    };
    if let Some(dir) = &args.dump_traces {
        ensure_dir(dir)?;
    }
    let mut summaries = Vec::new();
    let mut traces = Vec::new();
    for &problem in &args.problems {
        for &variant in variants {
            for &eps in &args.eps {
                let exp = SuccessExperiment {
                    problem,
                    variant,
                    eps,
                    mode: args.mode,
                    trials: args.trials as usize,
                    agents: args.agents,
                    iterations: args.iterations,
                    seed,
                    keep_traces: args.dump_traces.is_some(),
                };
                let (summary, outcomes) = run_success_experiment(&exp)?;
                if let Some(dir) = &args.dump_traces {
                    for o in &outcomes {
                        if let Some(trace) = &o.trace {
                            let name = format!("trace_f{problem}_eps{eps}_trial{}.csv", o.trial);
                            csv_io::write_trace(create(&dir.join(&name))?, trace)?;
                            traces.push(name);
                        }
                    }
                }
                summaries.push(summary);
            }
        }
    }
    csv_io::write_success_summaries(io::stdout().lock(), &summaries)?;
    if let Some(dir) = &args.out_dir {
        ensure_dir(dir)?;
        csv_io::write_success_summaries(create(&dir.join("benchmark.csv"))?, &summaries)?;
        let mut m = Manifest::new(
            "benchmark",
            argv,
            seed,
            json!({
                "problems": args.problems,
                "variant": format!("{:?}", args.variant).to_lowercase(),
                "eps": args.eps,
                "mode": args.mode,
                "trials": args.trials,
                "agents": args.agents,
                "iterations": args.iterations,
                "dump_traces": args.dump_traces,
                "traces": traces,
            }),
        );
        m.outputs.push("benchmark.csv".into());
        m.write(dir)?;
    }
    Ok(0)
}

fn hitting(args: HittingArgs, seed: u64, argv: &[String]) -> Result<u8> {
    if args.dim == 0 || args.agents == 0 || args.max_iterations == 0 {
        return Err(usage("--dim, --agents and --max-iterations must be positive"));
    }
    if args.leaders.len() != 3 {
        return Err(usage("--leaders takes exactly three values"));
    }
    if !(args.half_box > 0.0) {
        return Err(usage("--box must be positive"));
    }
    let objective = Arc::new(|x: &[f64]| x.iter().map(|v| (v - 1.0) * (v - 1.0)).sum::<f64>());
    let target = TargetSet::new_level(objective, 0.0, args.eps, EpsMode::Absolute).map_err(|e| usage(e.to_string()))?;
    let leaders = [0, 1, 2].map(|k| vec![args.leaders[k]; args.dim]);
    let mut cfg = StagnationConfig::new(leaders, target, args.horizon, seed)?;
    cfg.agents = args.agents;
    cfg.init = vec![(-args.half_box, args.half_box); args.dim];
    cfg.validate()?;
    let outcomes = (0..args.trials)
        .into_par_iter()
        .map(|trial| stagnation::run_until_hit(&cfg, args.max_iterations, trial))
        .collect::<gwo_lab::Result<Vec<_>>>()?;
    csv_io::write_hit_summary(io::stdout().lock(), &outcomes)?;
    let hits: Vec<f64> = outcomes.iter().filter(|o| o.hit).map(|o| o.iterations_used as f64).collect();
    let mean = (!hits.is_empty()).then(|| hits.iter().sum::<f64>() / hits.len() as f64);
    eprintln!(
        "hits {}/{}, mean first-hit iteration {}",
        hits.len(),
        outcomes.len(),
        mean.map_or("n/a".to_string(), |m| format!("{m:.1}"))
    );
    if let Some(dir) = &args.out_dir {
        ensure_dir(dir)?;
        csv_io::write_hit_summary(create(&dir.join("hits.csv"))?, &outcomes)?;
        let mut m = Manifest::new(
            "hitting",
            argv,
            seed,
            json!({
                "dim": args.dim,
                "agents": args.agents,
                "trials": args.trials,
                "eps": args.eps,
                "horizon": args.horizon,
                "max_iterations": args.max_iterations,
                "init": [-args.half_box, args.half_box],
                "mean_iterations": mean,
            }),
        );
        m.leaders = Some(args.leaders.clone());
        m.outputs.push("hits.csv".into());
        m.write(dir)?;
    }
    Ok(0)
}

fn check(path: &Path) -> Result<u8> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let rows = csv_io::read_trace(file).with_context(|| format!("reading {}", path.display()))?;
    if rows.len() < 2 {
        println!("pass: single record, nothing to compare");
        return Ok(0);
    }
    let best: Vec<f64> = rows.iter().map(|r| r.best_fitness).collect();
    let trace = CriteriaTrace::from_best_sequence(&best)?;
    match check_algorithm_condition(&trace) {
        ConditionReport::Pass => {
            println!("pass: {} transitions satisfy the algorithm condition", trace.triples().len());
            Ok(0)
        }
        ConditionReport::Violation { index, triple } => {
            // header is line 1 and record k sits on line k + 2
            println!(
                "FAIL: violation at t = {} (line {}): f(z(t)) = {}, f(xi(t)) = {}, f(z(t+1)) = {}",
                rows[index + 1].t,
                index + 3,
                fmt_f64(triple.best),
                fmt_f64(triple.candidate),
                fmt_f64(triple.next_best)
            );
            Ok(EXIT_CHECK_FAILED)
        }
    }
}

fn bound(path: &Path) -> Result<u8> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let m = csv_io::read_hit_matrix(file).with_context(|| format!("reading {}", path.display()))?;
    let r = failure_report(&m);
    let (t, n, d) = m.shape();
    let mut out = io::stdout().lock();
    writeln!(out, "t_obs,n,d,failure_product,failure_upper_bound")?;
    writeln!(out, "{t},{n},{d},{},{}", fmt_f64(r.product), fmt_f64(r.bound))?;
    Ok(0)
}

fn replay(path: &Path, out_dir: Option<PathBuf>) -> Result<u8> {
    use clap::Parser;

    let m = Manifest::read(path)?;
    let mut argv = m.replay_argv();
    if let Some(dir) = out_dir {
        argv.push("--out-dir".into());
        argv.push(dir.display().to_string());
    }
    if argv.first().map(String::as_str) == Some("replay") {
        bail!("a manifest cannot replay another replay");
    }
    let cli = Cli::try_parse_from(std::iter::once("gwolab".to_string()).chain(argv.iter().cloned()))
        .map_err(|e| usage(format!("manifest argv no longer parses: {e}")))?;
    run(cli, argv)
}
