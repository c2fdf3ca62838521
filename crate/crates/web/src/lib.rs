//! Browser bindings for the demo page in `www/`. Each export returns a JSON
//! string; the plain functions underneath are what the tests exercise.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use gwo_lab::benchmarks::TestProblem;
use gwo_lab::gwo::{self, AMode, GwoParams, StopRule};
use gwo_lab::moments::theory_table;
use gwo_lab::montecarlo::{run_pdf_experiment, EnsembleConfig};

#[derive(Debug, Serialize)]
pub struct Curve {
    pub r: u32,
    pub critical_a: f64,
    pub f: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct MomentCurves {
    pub a: Vec<f64>,
    pub curves: Vec<Curve>,
}

/// f_r(a) on an even grid over `[a_min, a_max]` for every even r up to `r_max`.
pub fn moment_curves(r_max: u32, a_min: f64, a_max: f64, points: usize) -> gwo_lab::Result<MomentCurves> {
    if points < 2 || !(a_min < a_max) {
        return Err(gwo_lab::Error::Domain(format!(
            "need at least 2 points on a non-empty range, got {points} on [{a_min}, {a_max}]"
        )));
    }
    let step = (a_max - a_min) / (points - 1) as f64;
    let a: Vec<f64> = (0..points).map(|i| a_min + step * i as f64).collect();
    let curves = theory_table(r_max, &a)?
        .into_iter()
        .map(|row| Curve { r: row.r, critical_a: row.critical_a, f: row.f_values })
        .collect();
    Ok(MomentCurves { a, curves })
}

#[derive(Debug, Serialize)]
pub struct Pdf {
    pub t: usize,
    pub leaders: [f64; 3],
    pub mids: Vec<f64>,
    pub density: Vec<f64>,
    pub mean: f64,
}

/// Histogram of one coordinate under frozen leaders after `t` iterations.
/// `const_a` of `None` uses the schedule with horizon 2000.
pub fn stagnation_pdf(trials: usize, t: usize, bins: usize, const_a: Option<f64>, seed: u64) -> gwo_lab::Result<Pdf> {
    let mut cfg = EnsembleConfig::new(trials, seed)?;
    cfg.t_max = t;
    if let Some(a) = const_a {
        cfg.a_mode = AMode::Constant(a);
    }
    let snap = run_pdf_experiment(&cfg, &[t], bins)?.remove(0);
    Ok(Pdf {
        t,
        leaders: cfg.leaders,
        mids: snap.histogram.mids(),
        density: snap.histogram.density,
        mean: snap.mean,
    })
}

#[derive(Debug, Serialize)]
pub struct Trace {
    pub problem: u8,
    pub name: &'static str,
    pub f_opt: f64,
    pub best: Vec<f64>,
}

/// Best-so-far fitness of one GWO run on a suite problem.
pub fn benchmark_trace(problem: u8, agents: usize, iterations: usize, seed: u64) -> gwo_lab::Result<Trace> {
    let tp = TestProblem::get(problem)?;
    let params = GwoParams::new(agents, iterations, seed)?;
    let run = gwo::run(&tp.to_problem(), &params, &StopRule::MaxIterations)?;
    Ok(Trace { problem, name: tp.name, f_opt: tp.f_opt, best: run.best_fitness() })
}

fn to_js<T: Serialize>(value: gwo_lab::Result<T>) -> Result<String, JsValue> {
    let value = value.map_err(|e| JsValue::from_str(&e.to_string()))?;
    serde_json::to_string(&value).map_err(|e| JsValue::from_str(&e.to_string()))
}

#[wasm_bindgen(js_name = momentCurves)]
pub fn moment_curves_js(r_max: u32, a_min: f64, a_max: f64, points: usize) -> Result<String, JsValue> {
    to_js(moment_curves(r_max, a_min, a_max, points))
}

/// A negative `const_a` selects the scheduled a.
#[wasm_bindgen(js_name = stagnationPdf)]
pub fn stagnation_pdf_js(trials: usize, t: usize, bins: usize, const_a: f64, seed: u32) -> Result<String, JsValue> {
    let a = (const_a >= 0.0).then_some(const_a);
    to_js(stagnation_pdf(trials, t, bins, a, u64::from(seed)))
}

#[wasm_bindgen(js_name = benchmarkTrace)]
pub fn benchmark_trace_js(problem: u8, agents: usize, iterations: usize, seed: u32) -> Result<String, JsValue> {
    to_js(benchmark_trace(problem, agents, iterations, u64::from(seed)))
}
