//! CSV tables. Floats are written in Rust's shortest round-trip form, so a
//! reloaded table reproduces the in-memory numbers exactly.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use super::{Aggregate, ExperimentError, SolverKind, SweepRecord};
use crate::state_evolution::MacroState;

pub const RECORD_HEADER: &str =
    "solver,n,m,alpha,rho,j,k,trial,seed,iterations,converged,mse,success,wall_ms";
pub const AGGREGATE_HEADER: &str = "solver,n,alpha,rho,trials,successes,p_success,stderr";
const TRAJECTORY_HEADER: &str = "iteration,alpha,rho,m,q,c,mse";

/// Shortest round-trip form, switching to scientific notation outside
/// `[1e-4, 1e15)` so tiny errors stay readable.
fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&a) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

fn header(h: &str) -> Vec<&str> {
    h.split(',').collect()
}

fn writer<W: Write>(w: W, h: &str) -> Result<::csv::Writer<W>, ExperimentError> {
    let mut out = ::csv::WriterBuilder::new().has_headers(false).from_writer(w);
    out.write_record(header(h))?;
    Ok(out)
}

/// Writes per-trial records; an empty slice is an error and creates no file.
pub fn write_records(path: impl AsRef<Path>, records: &[SweepRecord]) -> Result<(), ExperimentError> {
    if records.is_empty() {
        return Err(ExperimentError::EmptyTable);
    }
    let mut w = writer(File::create(path)?, RECORD_HEADER)?;
    for r in records {
        w.write_record([
            r.solver.name().to_string(),
            r.n.to_string(),
            r.m.to_string(),
            num(r.alpha),
            num(r.rho),
            r.j.to_string(),
            r.k.to_string(),
            r.trial.to_string(),
            r.seed.to_string(),
            r.iterations.to_string(),
            r.converged.to_string(),
            num(r.mse),
            r.success.to_string(),
            format!("{:.3}", r.wall_ms),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes per-`(n, rho)` aggregates; an empty slice is an error and creates
/// no file.
pub fn write_aggregates(path: impl AsRef<Path>, aggs: &[Aggregate]) -> Result<(), ExperimentError> {
    if aggs.is_empty() {
        return Err(ExperimentError::EmptyTable);
    }
    let mut w = writer(File::create(path)?, AGGREGATE_HEADER)?;
    for a in aggs {
        w.write_record([
            a.solver.name().to_string(),
            a.n.to_string(),
            num(a.alpha),
            num(a.rho),
            a.trials.to_string(),
            a.successes.to_string(),
            num(a.p_success),
            num(a.stderr),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn field<T: std::str::FromStr>(rec: &::csv::StringRecord, idx: usize, line: usize) -> Result<T, ExperimentError> {
    let raw = rec.get(idx).ok_or_else(|| ExperimentError::Parse {
        line,
        msg: format!("missing column {idx}"),
    })?;
    raw.parse().map_err(|_| ExperimentError::Parse {
        line,
        msg: format!("cannot parse {raw:?} in column {idx}"),
    })
}

pub fn read_aggregates(path: impl AsRef<Path>) -> Result<Vec<Aggregate>, ExperimentError> {
    let mut r = ::csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)?;
    let mut rows = r.records();
    let head = rows.next().ok_or(ExperimentError::EmptyTable)??;
    if head.iter().collect::<Vec<_>>() != header(AGGREGATE_HEADER) {
        return Err(ExperimentError::Parse {
            line: 1,
            msg: format!("expected header {AGGREGATE_HEADER:?}"),
        });
    }
    let mut out = Vec::new();
    for (idx, rec) in rows.enumerate() {
        let rec = rec?;
        let line = idx + 2;
        let solver: String = field(&rec, 0, line)?;
        out.push(Aggregate {
            solver: solver
                .parse::<SolverKind>()
                .map_err(|msg| ExperimentError::Parse { line, msg })?,
            n: field(&rec, 1, line)?,
            alpha: field(&rec, 2, line)?,
            rho: field(&rec, 3, line)?,
            trials: field(&rec, 4, line)?,
            successes: field(&rec, 5, line)?,
            p_success: field(&rec, 6, line)?,
            stderr: field(&rec, 7, line)?,
        });
    }
    Ok(out)
}

/// Writes an SE trajectory, one row per update.
pub fn write_trajectory(path: impl AsRef<Path>, states: &[MacroState]) -> Result<(), ExperimentError> {
    if states.is_empty() {
        return Err(ExperimentError::EmptyTable);
    }
    let mut w = writer(File::create(path)?, TRAJECTORY_HEADER)?;
    for (t, s) in states.iter().enumerate() {
        w.write_record([
            (t + 1).to_string(),
            num(s.alpha),
            num(s.rho),
            num(s.m),
            num(s.q),
            num(s.c),
            num(s.mse),
        ])?;
    }
    w.flush()?;
    Ok(())
}
