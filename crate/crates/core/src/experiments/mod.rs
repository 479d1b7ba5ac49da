//! Seeded Monte-Carlo phase-transition experiments.
//!
//! Every trial draws its own `(matrix, signal)` from a seed derived only from
//! `(base_seed, n, rho, trial)`, so results do not depend on thread count or
//! completion order, and changing one grid point leaves the others alone.

mod chart;
mod csv;

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

pub use self::chart::{render_chart, write_chart};
pub use self::csv::{
    read_aggregates, write_aggregates, write_records, write_trajectory, AGGREGATE_HEADER,
    RECORD_HEADER,
};

use crate::amp::{run_amp, AmpConfig};
use crate::bp::{settled, BpConfig, BpSolver};
use crate::instance::{
    gen_dense_matrix, gen_regular_sparse_matrix, gen_signal, splitmix64, EnsembleSpec,
    InstanceError, RngSeed, SignalVector, SparseMeasurementMatrix, STREAM_MATRIX, STREAM_SHUFFLE,
    STREAM_SIGNAL,
};
use crate::recovery::{RecoveryResult, SolverError, SUCCESS_MSE};
use crate::state_evolution::{find_threshold, trajectory, MacroState, SeConfig, SeError};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("the table is empty")]
    EmptyTable,
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    StateEvolution(#[from] SeError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] ::csv::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverKind {
    Bp,
    Amp,
    /// BP with the graph re-drawn before every check update.
    De,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Bp => "bp",
            SolverKind::Amp => "amp",
            SolverKind::De => "de",
        }
    }

    pub fn default_max_iters(self) -> usize {
        match self {
            SolverKind::Bp | SolverKind::De => 1000,
            SolverKind::Amp => 10_000,
        }
    }

    fn is_sparse(self) -> bool {
        !matches!(self, SolverKind::Amp)
    }
}

impl std::str::FromStr for SolverKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bp" => Ok(SolverKind::Bp),
            "amp" => Ok(SolverKind::Amp),
            "de" => Ok(SolverKind::De),
            other => Err(format!("unknown solver {other:?}")),
        }
    }
}

/// `min, min + step, …` up to `max` inclusive (with a half-step allowance
/// for rounding).
pub fn rho_grid(min: f64, max: f64, step: f64) -> Result<Vec<f64>, ExperimentError> {
    if !(min.is_finite() && max.is_finite() && min <= max) {
        return Err(ExperimentError::InvalidConfig(format!(
            "rho range [{min}, {max}] is empty"
        )));
    }
    if min == max {
        return Ok(vec![min]);
    }
    if !(step > 0.0) {
        return Err(ExperimentError::InvalidConfig("rho step must be positive".into()));
    }
    let count = ((max - min) / step + 0.5).floor() as usize + 1;
    Ok((0..count).map(|k| min + k as f64 * step).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub solver: SolverKind,
    pub ns: Vec<usize>,
    pub alpha: f64,
    pub rhos: Vec<f64>,
    pub j: usize,
    pub k: usize,
    pub trials: usize,
    pub base_seed: u64,
    pub max_iters: usize,
    pub success_tol: f64,
    pub convergence_tol: f64,
    pub threads: usize,
}

impl SweepConfig {
    /// Desk-scale defaults: `α = 1/2`, `(j, k) = (10, 20)`, 100 trials.
    pub fn new(solver: SolverKind, ns: Vec<usize>, rhos: Vec<f64>) -> Self {
        Self {
            solver,
            ns,
            alpha: 0.5,
            rhos,
            j: 10,
            k: 20,
            trials: 100,
            base_seed: 1,
            max_iters: solver.default_max_iters(),
            success_tol: SUCCESS_MSE,
            convergence_tol: 1e-10,
            threads: 1,
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::InvalidConfig(m));
        if self.ns.is_empty() || self.rhos.is_empty() {
            return bad("the (n, rho) grid is empty".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.threads == 0 {
            return bad("threads must be at least 1".into());
        }
        if let Some(r) = self.rhos.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return bad(format!("rho {r} outside [0, 1]"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha {} outside (0, 1)", self.alpha));
        }
        if self.solver.is_sparse() && (self.j as f64 / self.k as f64 - self.alpha).abs() > 1e-12 {
            return bad(format!(
                "(j, k) = ({}, {}) implies alpha = {}, not {}",
                self.j,
                self.k,
                self.j as f64 / self.k as f64,
                self.alpha
            ));
        }
        for &n in &self.ns {
            self.spec(n)?;
        }
        Ok(())
    }

    pub fn spec(&self, n: usize) -> Result<EnsembleSpec, ExperimentError> {
        Ok(if self.solver.is_sparse() {
            EnsembleSpec::regular_for_n(n, self.j, self.k)?
        } else {
            EnsembleSpec::dense(n, (self.alpha * n as f64).round() as usize)?
        })
    }

    fn bp_config(&self) -> BpConfig {
        BpConfig {
            max_iters: self.max_iters,
            convergence_tol: self.convergence_tol,
            success_tol: self.success_tol,
            ..BpConfig::default()
        }
    }

    fn amp_config(&self) -> AmpConfig {
        AmpConfig {
            max_iters: self.max_iters,
            convergence_tol: self.convergence_tol,
            success_tol: self.success_tol,
            ..AmpConfig::default()
        }
    }
}

/// Seed of one trial: a SplitMix64 chain over `(base, n, rho bits, trial)`.
pub fn trial_seed(base: u64, n: usize, rho: f64, trial: usize) -> u64 {
    let mut h = splitmix64(base);
    h = splitmix64(h ^ n as u64);
    h = splitmix64(h ^ rho.to_bits());
    splitmix64(h ^ trial as u64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub solver: SolverKind,
    pub n: usize,
    pub m: usize,
    pub alpha: f64,
    pub rho: f64,
    /// Zero for dense runs.
    pub j: usize,
    pub k: usize,
    pub trial: usize,
    pub seed: u64,
    pub iterations: usize,
    pub converged: bool,
    pub mse: f64,
    pub success: bool,
    pub wall_ms: f64,
}

impl SweepRecord {
    /// Equality of everything but the wall time.
    pub fn same_outcome(&self, other: &Self) -> bool {
        let strip = |r: &Self| Self { wall_ms: 0.0, ..r.clone() };
        let (a, b) = (strip(self), strip(other));
        a == b || (a.mse.is_nan() && b.mse.is_nan() && Self { mse: 0.0, ..a } == Self { mse: 0.0, ..b })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub solver: SolverKind,
    pub n: usize,
    pub alpha: f64,
    pub rho: f64,
    pub trials: usize,
    pub successes: usize,
    pub p_success: f64,
    /// Binomial standard error `√(p(1−p)/trials)`.
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub records: Vec<SweepRecord>,
    pub aggregates: Vec<Aggregate>,
}

impl SweepTable {
    /// Sorts the records by `(n, rho, trial)` and recomputes the aggregates,
    /// so the result does not depend on the order the records arrived in.
    pub fn from_records(mut records: Vec<SweepRecord>) -> Self {
        records.sort_by(|a, b| {
            (a.n, a.rho, a.trial)
                .partial_cmp(&(b.n, b.rho, b.trial))
                .expect("rho is finite")
        });
        let mut aggregates: Vec<Aggregate> = Vec::new();
        for r in &records {
            match aggregates.last_mut() {
                Some(a) if a.n == r.n && a.rho == r.rho && a.solver == r.solver => {
                    a.trials += 1;
                    a.successes += usize::from(r.success);
                }
                _ => aggregates.push(Aggregate {
                    solver: r.solver,
                    n: r.n,
                    alpha: r.alpha,
                    rho: r.rho,
                    trials: 1,
                    successes: usize::from(r.success),
                    p_success: 0.0,
                    stderr: 0.0,
                }),
            }
        }
        for a in &mut aggregates {
            a.p_success = a.successes as f64 / a.trials as f64;
            a.stderr = (a.p_success * (1.0 - a.p_success) / a.trials as f64).sqrt();
        }
        Self { records, aggregates }
    }

    pub fn aggregate(&self, n: usize, rho: f64) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.n == n && a.rho == rho)
    }
}

/// Runs one trial of `cfg` at `(n, rho, trial)`.
pub fn run_trial(
    cfg: &SweepConfig,
    n: usize,
    rho: f64,
    trial: usize,
) -> Result<SweepRecord, ExperimentError> {
    let spec = cfg.spec(n)?;
    let seed = trial_seed(cfg.base_seed, n, rho, trial);
    let start = Instant::now();
    let x0 = gen_signal(n, rho, RngSeed::new(seed, STREAM_SIGNAL))?;
    let result = match cfg.solver {
        SolverKind::Bp => {
            let f = gen_regular_sparse_matrix(&spec, RngSeed::new(seed, STREAM_MATRIX))?;
            let y = f.measure(&x0)?;
            BpSolver::new(&f, cfg.bp_config())?.run(&f, &y, Some(&x0))
        }
        SolverKind::De => density_evolution_trial(&spec, &x0, seed, &cfg.bp_config())?,
        SolverKind::Amp => {
            let f = gen_dense_matrix(&spec, RngSeed::new(seed, STREAM_MATRIX))?;
            let y = f.measure(&x0)?;
            run_amp(&f, &y, &cfg.amp_config(), Some(&x0))?
        }
    };
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let (j, k) = if cfg.solver.is_sparse() { (cfg.j, cfg.k) } else { (0, 0) };
    let mse = result.mse_vs_truth.unwrap_or(f64::NAN);
    Ok(SweepRecord {
        solver: cfg.solver,
        n,
        m: spec.m,
        alpha: spec.alpha(),
        rho,
        j,
        k,
        trial,
        seed,
        iterations: result.iterations,
        converged: result.converged,
        mse,
        success: mse < cfg.success_tol,
        wall_ms,
    })
}

/// One BP run in which the graph is re-drawn every sweep.
///
/// Each sweep computes the variable-to-check messages on the current graph,
/// re-pairs the sockets uniformly (degrees kept, values re-sampled, `y`
/// recomputed as `F x⁰`), then computes the check-to-variable messages and
/// the estimate on the new graph. Messages stay attached to their edge id,
/// i.e. to their column socket; the row at the other end changes.
pub fn density_evolution_trial(
    spec: &EnsembleSpec,
    x0: &SignalVector,
    seed: u64,
    cfg: &BpConfig,
) -> Result<RecoveryResult, ExperimentError> {
    let mut f = gen_regular_sparse_matrix(spec, RngSeed::new(seed, STREAM_MATRIX))?;
    let mut y = f.measure(x0)?.values().to_vec();
    let mut solver = BpSolver::new(&f, *cfg)?;
    let mut shuffle = RngSeed::new(seed, STREAM_SHUFFLE).rng();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        solver.update_variable_to_check(&f, &y);
        f = repair(spec, shuffle.random())?;
        y = f.mul_vec(x0.values());
        solver.update_check_to_variable(&f);
        let delta = solver.commit_estimate(&f, &y);
        iterations += 1;
        if !solver.x_hat().iter().all(|v| v.is_finite()) {
            break;
        }
        if delta < cfg.convergence_tol
            && (iterations > 1 || settled(f.mul_vec(solver.x_hat()), &y, cfg.convergence_tol))
        {
            converged = true;
            break;
        }
    }
    let residual: Vec<f64> = y
        .iter()
        .zip(f.mul_vec(solver.x_hat()))
        .map(|(a, b)| a - b)
        .collect();
    Ok(RecoveryResult::new(
        solver.x_hat().to_vec(),
        iterations,
        converged,
        &residual,
        Some(x0),
        cfg.success_tol,
    ))
}

fn repair(spec: &EnsembleSpec, seed: u64) -> Result<SparseMeasurementMatrix, InstanceError> {
    gen_regular_sparse_matrix(spec, RngSeed::new(seed, STREAM_SHUFFLE))
}

fn run_grid(cfg: &SweepConfig) -> Result<SweepTable, ExperimentError> {
    cfg.validate()?;
    let tasks: Vec<(usize, f64, usize)> = cfg
        .ns
        .iter()
        .flat_map(|&n| {
            cfg.rhos
                .iter()
                .flat_map(move |&rho| (0..cfg.trials).map(move |t| (n, rho, t)))
        })
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| ExperimentError::ThreadPool(e.to_string()))?;
    let records = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(n, rho, t)| run_trial(cfg, n, rho, t))
            .collect::<Result<Vec<_>, _>>()
    })?;
    Ok(SweepTable::from_records(records))
}

/// Monte-Carlo sweep over the `(n, rho)` grid with the configured solver.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepTable, ExperimentError> {
    run_grid(cfg)
}

/// [`run_sweep`] with the re-drawn-graph variant of BP.
pub fn run_density_evolution(cfg: &SweepConfig) -> Result<SweepTable, ExperimentError> {
    if !cfg.solver.is_sparse() {
        return Err(ExperimentError::InvalidConfig(
            "density evolution needs the sparse ensemble".into(),
        ));
    }
    run_grid(&SweepConfig {
        solver: SolverKind::De,
        ..cfg.clone()
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeReport {
    pub alpha: f64,
    pub threshold: f64,
    /// States after updates `1..` when a trajectory was requested.
    pub trajectory: Option<(f64, Vec<MacroState>)>,
}

/// Threshold at `alpha`, plus the trajectory at `trajectory_rho` if given.
pub fn run_se(
    alpha: f64,
    cfg: &SeConfig,
    bisect_tol: f64,
    trajectory_rho: Option<(f64, usize)>,
) -> Result<SeReport, ExperimentError> {
    let threshold = find_threshold(alpha, cfg, bisect_tol)?;
    let trajectory = trajectory_rho
        .map(|(rho, iters)| trajectory(rho, alpha, cfg, iters).map(|t| (rho, t)))
        .transpose()?;
    Ok(SeReport {
        alpha,
        threshold,
        trajectory,
    })
}
