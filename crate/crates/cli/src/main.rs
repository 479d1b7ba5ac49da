//! `l1mp`: instance generation, single solver runs, Monte-Carlo sweeps,
//! state evolution and the brute-force oracle.
//!
//! Exit codes: 0 on success, 1 on a usage error, 2 on a runtime or I/O error.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use l1mp::experiments::{
    rho_grid, ExperimentError, run_density_evolution, run_se, run_sweep, trial_seed, write_aggregates, write_chart,
    write_records, write_trajectory, SolverKind, SweepConfig, SweepTable,
};
use l1mp::instance::{
    gen_dense_matrix, gen_regular_sparse_matrix, gen_signal, load_instance, save_instance,
    write_instance, EnsembleSpec, InstanceError, Instance, MeasurementMatrix, RngSeed, SparseMeasurementMatrix,
    STREAM_MATRIX, STREAM_SIGNAL,
};
use l1mp::oracle::{brute_force_l1, check_certificate, OracleError};
use l1mp::recovery::SolverError;
use l1mp::state_evolution::{CSchedule, MomentMethod, QuadratureSpec, SeConfig, SeError};
use l1mp::{run_amp, run_bp, AmpConfig, BpConfig, RecoveryResult};

#[derive(Parser, Debug)]
#[command(name = "l1mp", version, about = "Message-passing l1 recovery for compressed sensing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate an instance and write it in the text format.
    Gen(GenArgs),
    /// Run sparse-graph BP on one instance.
    Bp(SolveArgs),
    /// Run the dense AMP iteration on one instance.
    Amp(SolveArgs),
    /// Monte-Carlo success-probability sweep.
    Sweep(SweepArgs),
    /// Sweep with the graph re-drawn before every BP sweep.
    De(SweepArgs),
    /// State-evolution threshold and trajectory.
    Se(SeArgs),
    /// Brute-force l1 minimizer and dual certificate (n ≤ 16).
    Oracle(OracleArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Ensemble {
    Sparse,
    Dense,
}

#[derive(Args, Debug, Clone)]
struct InstanceArgs {
    #[arg(long, default_value_t = 3200)]
    n: usize,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 0.1)]
    rho: f64,
    #[arg(long, default_value_t = 10)]
    j: usize,
    #[arg(long, default_value_t = 20)]
    k: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    #[arg(long, value_enum, default_value_t = Ensemble::Sparse)]
    ensemble: Ensemble,
    /// Output file; standard output if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    /// Instance file; generated from the instance flags if omitted.
    #[arg(long)]
    input: Option<PathBuf>,
    #[command(flatten)]
    inst: InstanceArgs,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long, default_value_t = 1e-8)]
    success_tol: f64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Damping: on B/D messages for bp, on the scalar C for amp.
    #[arg(long)]
    damping: Option<f64>,
    /// Write the estimate, one value per line.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, value_enum, default_value_t = SweepSolver::Bp)]
    solver: SweepSolver,
    /// Signal lengths, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "3200")]
    n: Vec<usize>,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Explicit rho values, comma separated (overrides the range flags).
    #[arg(long, value_delimiter = ',')]
    rho: Vec<f64>,
    #[arg(long, default_value_t = 0.05)]
    rho_min: f64,
    #[arg(long, default_value_t = 0.3)]
    rho_max: f64,
    #[arg(long, default_value_t = 0.05)]
    rho_step: f64,
    #[arg(long, default_value_t = 10)]
    j: usize,
    #[arg(long, default_value_t = 20)]
    k: usize,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long, default_value_t = 1e-8)]
    success_tol: f64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Per-trial CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Aggregate CSV.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// SVG chart of success probability against rho.
    #[arg(long)]
    chart: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum SweepSolver {
    Bp,
    Amp,
}

#[derive(Args, Debug)]
struct SeArgs {
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 1e-4)]
    bisect_tol: f64,
    /// Also print the trajectory at this rho.
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long, default_value_t = 20)]
    iters: usize,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Use quadrature instead of the closed-form moments.
    #[arg(long)]
    quadrature: bool,
    /// Lag C by one update with this damping, as the AMP iteration does.
    #[arg(long)]
    lagged: Option<f64>,
    /// Trajectory CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

fn generate(a: &InstanceArgs, ensemble: Ensemble) -> Result<Instance> {
    let seed = trial_seed(a.seed, a.n, a.rho, 0);
    let matrix: MeasurementMatrix = match ensemble {
        Ensemble::Sparse => {
            let spec = EnsembleSpec::regular_for_n(a.n, a.j, a.k)?;
            gen_regular_sparse_matrix(&spec, RngSeed::new(seed, STREAM_MATRIX))?.into()
        }
        Ensemble::Dense => {
            let spec = EnsembleSpec::dense(a.n, (a.alpha * a.n as f64).round() as usize)?;
            gen_dense_matrix(&spec, RngSeed::new(seed, STREAM_MATRIX))?.into()
        }
    };
    let signal = gen_signal(a.n, a.rho, RngSeed::new(seed, STREAM_SIGNAL))?;
    Ok(Instance::measured(matrix, signal)?)
}

fn report(r: &RecoveryResult) {
    println!("iterations {}", r.iterations);
    println!("converged {}", r.converged);
    println!("residual_inf {:e}", r.residual_inf);
    if let Some(mse) = r.mse_vs_truth {
        println!("mse {mse:e}");
    }
    if let Some(ok) = r.success {
        println!("success {ok}");
    }
}

fn write_estimate(path: &PathBuf, x: &[f64]) -> Result<()> {
    let text: String = x.iter().map(|v| format!("{v}\n")).collect();
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn cmd_gen(a: &GenArgs) -> Result<()> {
    let inst = generate(&a.inst, a.ensemble)?;
    match &a.out {
        Some(p) => save_instance(p, &inst)?,
        None => write_instance(std::io::stdout().lock(), &inst)?,
    }
    Ok(())
}

fn load_or_generate(a: &SolveArgs, ensemble: Ensemble) -> Result<Instance> {
    match &a.input {
        Some(p) => load_instance(p).with_context(|| format!("reading {}", p.display())),
        None => generate(&a.inst, ensemble),
    }
}

fn cmd_bp(a: &SolveArgs) -> Result<()> {
    let inst = load_or_generate(a, Ensemble::Sparse)?;
    let f = match &inst.matrix {
        MeasurementMatrix::Sparse(f) => f.clone(),
        MeasurementMatrix::Dense(d) => SparseMeasurementMatrix::from_dense(d),
    };
    let cfg = BpConfig {
        max_iters: a.max_iters.unwrap_or(1000),
        convergence_tol: a.tol,
        success_tol: a.success_tol,
        damping: a.damping.unwrap_or(0.0),
        ..BpConfig::default()
    };
    let r = run_bp(&f, &inst.measurements, &cfg, Some(&inst.signal))?;
    report(&r);
    if let Some(p) = &a.out {
        write_estimate(p, &r.x_hat)?;
    }
    Ok(())
}

fn cmd_amp(a: &SolveArgs) -> Result<()> {
    let inst = load_or_generate(a, Ensemble::Dense)?;
    let f = inst.matrix.to_dense();
    let mut cfg = AmpConfig {
        max_iters: a.max_iters.unwrap_or(10_000),
        convergence_tol: a.tol,
        success_tol: a.success_tol,
        ..AmpConfig::default()
    };
    if let Some(d) = a.damping {
        cfg.damping = d;
    }
    let r = run_amp(&f, &inst.measurements, &cfg, Some(&inst.signal))?;
    report(&r);
    if let Some(p) = &a.out {
        write_estimate(p, &r.x_hat)?;
    }
    Ok(())
}

fn sweep_config(a: &SweepArgs, solver: SolverKind) -> Result<SweepConfig> {
    let rhos = if a.rho.is_empty() {
        rho_grid(a.rho_min, a.rho_max, a.rho_step)?
    } else {
        a.rho.clone()
    };
    let mut cfg = SweepConfig::new(solver, a.n.clone(), rhos);
    cfg.alpha = a.alpha;
    cfg.j = a.j;
    cfg.k = a.k;
    cfg.trials = a.trials;
    cfg.base_seed = a.seed;
    cfg.max_iters = a.max_iters.unwrap_or(solver.default_max_iters());
    cfg.success_tol = a.success_tol;
    cfg.convergence_tol = a.tol;
    cfg.threads = a.threads;
    Ok(cfg)
}

fn emit(table: &SweepTable, a: &SweepArgs) -> Result<()> {
    println!("solver,n,alpha,rho,trials,successes,p_success,stderr");
    for g in &table.aggregates {
        println!(
            "{},{},{},{},{},{},{},{}",
            g.solver.name(),
            g.n,
            g.alpha,
            g.rho,
            g.trials,
            g.successes,
            g.p_success,
            g.stderr
        );
    }
    if let Some(p) = &a.out {
        write_records(p, &table.records)?;
    }
    if let Some(p) = &a.summary {
        write_aggregates(p, &table.aggregates)?;
    }
    if let Some(p) = &a.chart {
        write_chart(p, &table.aggregates)?;
    }
    Ok(())
}

fn cmd_sweep(a: &SweepArgs) -> Result<()> {
    let solver = match a.solver {
        SweepSolver::Bp => SolverKind::Bp,
        SweepSolver::Amp => SolverKind::Amp,
    };
    let table = run_sweep(&sweep_config(a, solver)?)?;
    emit(&table, a)
}

fn cmd_de(a: &SweepArgs) -> Result<()> {
    if a.solver != SweepSolver::Bp {
        return Err(Usage("density evolution runs on the sparse ensemble only").into());
    }
    let table = run_density_evolution(&sweep_config(a, SolverKind::Bp)?)?;
    emit(&table, a)
}

fn cmd_se(a: &SeArgs) -> Result<()> {
    let mut quad = QuadratureSpec::default();
    if let Some(m) = a.max_iters {
        quad.max_iters = m;
    }
    let cfg = SeConfig {
        quad,
        moments: if a.quadrature {
            MomentMethod::Quadrature
        } else {
            MomentMethod::ClosedForm
        },
        schedule: match a.lagged {
            Some(damping) => CSchedule::Lagged { damping },
            None => CSchedule::SelfConsistent,
        },
    };
    let rep = run_se(a.alpha, &cfg, a.bisect_tol, a.rho.map(|r| (r, a.iters)))?;
    println!("alpha {}", rep.alpha);
    println!("rho_c {:.6}", rep.threshold);
    if let Some((rho, states)) = &rep.trajectory {
        println!("iteration,rho,mse,c");
        for (t, s) in states.iter().enumerate() {
            println!("{},{},{:e},{:e}", t + 1, rho, s.mse, s.c);
        }
        if let Some(p) = &a.out {
            write_trajectory(p, states)?;
        }
    } else if a.out.is_some() {
        return Err(Usage("--out needs --rho to select a trajectory").into());
    }
    Ok(())
}

fn cmd_oracle(a: &OracleArgs) -> Result<()> {
    let inst = load_instance(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let f = inst.matrix.to_dense();
    let y = inst.measurements.values();
    let r = brute_force_l1(&f, y)?;
    let cert = check_certificate(&f, y, &r.x_star, a.tol)?;
    println!("l1_value {}", r.l1_value);
    println!("unique {}", r.unique);
    match cert.outcome {
        Ok(()) => println!("certificate ok"),
        Err(why) => println!("certificate failed: {why}"),
    }
    let err = r
        .x_star
        .iter()
        .zip(inst.signal.values())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    println!("max_abs_diff_vs_signal {err:e}");
    for v in &r.x_star {
        println!("{v}");
    }
    Ok(())
}

/// A flag combination that cannot work, found after parsing.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct Usage(&'static str);

/// Whether `e` stems from bad arguments rather than from running them.
fn is_usage(e: &anyhow::Error) -> bool {
    fn instance(e: &InstanceError) -> bool {
        matches!(e, InstanceError::InvalidSpec(_))
    }
    fn solver(e: &SolverError) -> bool {
        matches!(e, SolverError::InvalidConfig(_))
    }
    e.chain().any(|c| {
        if c.is::<Usage>() || c.is::<SeError>() {
            return true;
        }
        if let Some(e) = c.downcast_ref::<InstanceError>() {
            return instance(e);
        }
        if let Some(e) = c.downcast_ref::<SolverError>() {
            return solver(e);
        }
        if let Some(e) = c.downcast_ref::<OracleError>() {
            return matches!(e, OracleError::TooLarge(_));
        }
        match c.downcast_ref::<ExperimentError>() {
            Some(ExperimentError::InvalidConfig(_) | ExperimentError::StateEvolution(_)) => true,
            Some(ExperimentError::Instance(e)) => instance(e),
            Some(ExperimentError::Solver(e)) => solver(e),
            _ => false,
        }
    })
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Bp(a) => cmd_bp(a),
        Command::Amp(a) => cmd_amp(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::De(a) => cmd_de(a),
        Command::Se(a) => cmd_se(a),
        Command::Oracle(a) => cmd_oracle(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if is_usage(&e) { 1 } else { 2 })
        }
    }
}
