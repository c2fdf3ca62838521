//! CSV readers and writers. Floats are written with 17 significant digits in
//! a locale-independent exponent format; integers are written plainly.

use std::io::{Read, Write};

use crate::benchmarks::SuccessSummary;
use crate::criteria::HitProbabilityMatrix;
use crate::error::{Error, Result};
use crate::gwo::RunTrace;
use crate::moments::TheoryRow;
use crate::montecarlo::{HitProbSeries, MomentSeries};
use crate::stagnation::HitOutcome;
use crate::stats::Histogram;

pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().from_writer(w)
}

fn finish<W: Write>(mut w: csv::Writer<W>) -> Result<()> {
    w.flush()?;
    Ok(())
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => parse_error(line, format!("{other:?}")),
    }
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, idx: usize, name: &str) -> Result<T> {
    let line = rec.position().map_or(0, |p| p.line() as usize);
    let raw = rec
        .get(idx)
        .ok_or_else(|| parse_error(line, format!("missing column `{name}`")))?;
    raw.trim()
        .parse()
        .map_err(|_| parse_error(line, format!("cannot parse `{raw}` as {name}")))
}

/// One row of a trace CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: usize,
    pub best_fitness: f64,
    pub dist_to_optimum: Option<f64>,
    pub best_position: Vec<f64>,
}

pub fn write_trace<W: Write>(w: W, trace: &RunTrace) -> Result<()> {
    let dim = trace.records.first().map_or(0, |r| r.best_position.len());
    let mut out = writer(w);
    let mut header = vec!["t".to_string(), "best_fitness".into(), "dist_to_optimum".into()];
    header.extend((0..dim).map(|j| format!("best_pos_{j}")));
    out.write_record(&header).map_err(csv_error)?;
    for r in &trace.records {
        let mut row = vec![r.t.to_string(), fmt_f64(r.best_fitness), fmt_opt(r.dist_to_optimum)];
        row.extend(r.best_position.iter().map(|v| fmt_f64(*v)));
        out.write_record(&row).map_err(csv_error)?;
    }
    finish(out)
}

pub fn read_trace<R: Read>(r: R) -> Result<Vec<TraceRow>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let header = rdr.headers().map_err(csv_error)?.clone();
    let fixed = ["t", "best_fitness", "dist_to_optimum"];
    if header.len() < fixed.len() || header.iter().zip(fixed).any(|(h, f)| h.trim() != f) {
        return Err(parse_error(1, "expected header `t,best_fitness,dist_to_optimum,best_pos_0..`"));
    }
    for (j, h) in header.iter().skip(3).enumerate() {
        if h.trim() != format!("best_pos_{j}") {
            return Err(parse_error(1, format!("unexpected column `{h}`")));
        }
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let dist = match rec.get(2).map(str::trim) {
            Some("") | None => None,
            Some(_) => Some(field(&rec, 2, "dist_to_optimum")?),
        };
        let best_position = (3..header.len())
            .map(|j| field(&rec, j, "best position"))
            .collect::<Result<_>>()?;
        rows.push(TraceRow {
            t: field(&rec, 0, "t")?,
            best_fitness: field(&rec, 1, "best_fitness")?,
            dist_to_optimum: dist,
            best_position,
        });
    }
    if rows.is_empty() {
        return Err(parse_error(1, "trace has no records"));
    }
    Ok(rows)
}

/// `t,i,j,p` with one-based indices, one row per entry.
pub fn write_hit_matrix<W: Write>(w: W, m: &HitProbabilityMatrix) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["t", "i", "j", "p"]).map_err(csv_error)?;
    let (t_obs, n, d) = m.shape();
    for t in 0..t_obs {
        for i in 0..n {
            for j in 0..d {
                out.write_record([
                    (t + 1).to_string(),
                    (i + 1).to_string(),
                    (j + 1).to_string(),
                    fmt_f64(m.get(t, i, j)),
                ])
                .map_err(csv_error)?;
            }
        }
    }
    finish(out)
}

/// Reads `t,i,j,p`; the shape is the largest index seen on each axis and
/// every cell must appear exactly once.
pub fn read_hit_matrix<R: Read>(r: R) -> Result<HitProbabilityMatrix> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let header = rdr.headers().map_err(csv_error)?.clone();
    if header.iter().map(str::trim).ne(["t", "i", "j", "p"]) {
        return Err(parse_error(1, "expected header `t,i,j,p`"));
    }
    let mut entries = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let (t, i, j): (usize, usize, usize) = (field(&rec, 0, "t")?, field(&rec, 1, "i")?, field(&rec, 2, "j")?);
        let p: f64 = field(&rec, 3, "p")?;
        if t == 0 || i == 0 || j == 0 {
            return Err(parse_error(line, "indices are one-based"));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(parse_error(line, format!("probability {p} outside [0, 1]")));
        }
        entries.push((line, t - 1, i - 1, j - 1, p));
    }
    if entries.is_empty() {
        return Err(parse_error(1, "no entries"));
    }
    let t_obs = entries.iter().map(|e| e.1).max().unwrap() + 1;
    let n = entries.iter().map(|e| e.2).max().unwrap() + 1;
    let d = entries.iter().map(|e| e.3).max().unwrap() + 1;
    let mut data = vec![f64::NAN; t_obs * n * d];
    for (line, t, i, j, p) in entries {
        let slot = &mut data[(t * n + i) * d + j];
        if !slot.is_nan() {
            return Err(parse_error(line, format!("duplicate entry ({}, {}, {})", t + 1, i + 1, j + 1)));
        }
        *slot = p;
    }
    if data.iter().any(|p| p.is_nan()) {
        return Err(parse_error(0, format!("incomplete matrix: expected {t_obs} x {n} x {d} entries")));
    }
    HitProbabilityMatrix::new(t_obs, n, d, data)
}

/// `t,r,estimate,ln_estimate`; the log is left empty where the estimate is
/// not positive.
pub fn write_moments<W: Write>(w: W, series: &MomentSeries) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["t", "r", "estimate", "ln_estimate"]).map_err(csv_error)?;
    for &t in &series.t {
        for &r in &series.orders {
            out.write_record([
                t.to_string(),
                r.to_string(),
                fmt_f64(series.at(r, t).unwrap_or(f64::NAN)),
                fmt_opt(series.ln_at(r, t)),
            ])
            .map_err(csv_error)?;
        }
    }
    finish(out)
}

/// `bin_mid,density`.
pub fn write_pdf<W: Write>(w: W, hist: &Histogram) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["bin_mid", "density"]).map_err(csv_error)?;
    for (mid, d) in hist.polyline() {
        out.write_record([fmt_f64(mid), fmt_f64(d)]).map_err(csv_error)?;
    }
    finish(out)
}

/// `t,lb,ub,p_hat,log10_p_hat`.
pub fn write_hitprob<W: Write>(w: W, series: &[HitProbSeries]) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["t", "lb", "ub", "p_hat", "log10_p_hat"]).map_err(csv_error)?;
    let len = series.first().map_or(0, |s| s.p_hat.len());
    for t in 1..=len {
        for s in series {
            out.write_record([
                t.to_string(),
                fmt_f64(s.lb),
                fmt_f64(s.ub),
                fmt_f64(s.at(t)),
                fmt_opt(s.log10_at(t)),
            ])
            .map_err(csv_error)?;
        }
    }
    finish(out)
}

/// `problem,variant,eps,mode,trials,successes,mean_iterations,censored`.
pub fn write_success_summaries<W: Write>(w: W, rows: &[SuccessSummary]) -> Result<()> {
    let mut out = writer(w);
    out.write_record([
        "problem",
        "variant",
        "eps",
        "mode",
        "trials",
        "successes",
        "mean_iterations",
        "censored",
    ])
    .map_err(csv_error)?;
    for s in rows {
        out.write_record([
            s.problem.to_string(),
            s.variant.to_string(),
            fmt_f64(s.eps),
            s.mode.to_string(),
            s.trials.to_string(),
            s.success_count.to_string(),
            fmt_opt(s.mean_iterations),
            s.censored.to_string(),
        ])
        .map_err(csv_error)?;
    }
    finish(out)
}

/// `trial,hit,iterations_used`, trials numbered from 0.
pub fn write_hit_summary<W: Write>(w: W, outcomes: &[HitOutcome]) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["trial", "hit", "iterations_used"]).map_err(csv_error)?;
    for (trial, o) in outcomes.iter().enumerate() {
        out.write_record([trial.to_string(), o.hit.to_string(), o.iterations_used.to_string()])
            .map_err(csv_error)?;
    }
    finish(out)
}

/// `r,a_r,f_r(<a>)...,verdict`.
pub fn write_theory<W: Write>(w: W, a_grid: &[f64], rows: &[TheoryRow]) -> Result<()> {
    let mut out = writer(w);
    let mut header = vec!["r".to_string(), "a_r".into()];
    header.extend(a_grid.iter().map(|a| format!("f_r({a:?})")));
    header.push("verdict".into());
    out.write_record(&header).map_err(csv_error)?;
    for row in rows {
        let mut rec = vec![row.r.to_string(), fmt_f64(row.critical_a)];
        rec.extend(row.f_values.iter().map(|v| fmt_f64(*v)));
        rec.push(row.verdict.label().to_string());
        out.write_record(&rec).map_err(csv_error)?;
    }
    finish(out)
}
