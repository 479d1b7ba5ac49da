//! Dense-matrix limit of the edge-message solver.
//!
//! For a dense `F` with `N(0, 1/N)` entries every cavity curvature
//! concentrates on one scalar `A = α/C`, and the cavity fields reduce to a
//! residual iteration with an Onsager memory term:
//!
//! ```text
//! z_μ = y_μ − Σ_i F_{μi} x̂_i + (1/C) (N⁻¹ Σ_i f'(B_i; A)) z_μ
//! B_i = (1/C) Σ_μ F_{μi} z_μ + (α/C) x̂_i
//! x̂_i = f(B_i; A),   C = N⁻¹ Σ_i f'(B_i; A),   A = α/C
//! ```
//!
//! Since `f' = Θ(|B|−1)/A = Θ(|B|−1)·C/α`, the Onsager coefficient equals the
//! active fraction over `α`, which is 1 once `C` has settled.

use crate::instance::{DenseMeasurementMatrix, MeasurementVector, SignalVector};
use crate::kernel::shrink;
use crate::linalg::dot;
use crate::recovery::{check_len, RecoveryResult, SolverError, SUCCESS_MSE};

/// How the scalar `C` is chosen before the first sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialC {
    /// `C` such that exactly `M` of the first-sweep fields `|Fᵀy|/C` exceed 1,
    /// i.e. the `(M+1)`-th largest `|Fᵀy|`. The first sweep then activates an
    /// `α` fraction of the variables, the value `C` takes at any fixed point.
    ActivityQuantile,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmpConfig {
    pub max_iters: usize,
    pub convergence_tol: f64,
    pub c_floor: f64,
    pub c_init: InitialC,
    /// Mixing `C ← (1−γ)·C_new + γ·C_old` on the scalar refresh.
    pub damping: f64,
    pub success_tol: f64,
}

impl Default for AmpConfig {
    fn default() -> Self {
        Self {
            max_iters: 10_000,
            convergence_tol: 1e-10,
            c_floor: 1e-12,
            c_init: InitialC::ActivityQuantile,
            damping: 0.8,
            success_tol: SUCCESS_MSE,
        }
    }
}

impl AmpConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |msg: &str| Err(SolverError::InvalidConfig(msg.into()));
        if self.max_iters == 0 {
            return bad("max_iters must be positive");
        }
        if !(self.convergence_tol > 0.0) || !(self.success_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        if !(self.c_floor > 0.0) {
            return bad("c_floor must be positive");
        }
        if let InitialC::Fixed(c) = self.c_init {
            if !(c > 0.0 && c.is_finite()) {
                return bad("initial C must be positive and finite");
            }
        }
        if !(0.0..1.0).contains(&self.damping) {
            return bad("damping must lie in [0, 1)");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmpState {
    pub x_hat: Vec<f64>,
    /// `z_μ = y_μ − D_μ`.
    pub z: Vec<f64>,
    pub b_field: Vec<f64>,
    pub c_scalar: f64,
    pub a_scalar: f64,
    /// Coefficient of `z` in the next residual update.
    pub onsager: f64,
    pub iter: usize,
}

/// Operation count of one sweep of the edge-message form on a dense graph:
/// `M·N` messages each way, every one an `O(M)` or `O(N)` sum.
pub fn naive_message_cost(n: usize, m: usize) -> u64 {
    (m as u64) * (n as u64) * ((m + n) as u64)
}

#[derive(Debug, Clone)]
pub struct AmpSolver<'a> {
    f: &'a DenseMeasurementMatrix,
    y: &'a [f64],
    alpha: f64,
    cfg: AmpConfig,
    state: AmpState,
    fx: Vec<f64>,
    ops: u64,
}

impl<'a> AmpSolver<'a> {
    pub fn new(
        f: &'a DenseMeasurementMatrix,
        y: &'a MeasurementVector,
        cfg: AmpConfig,
    ) -> Result<Self, SolverError> {
        cfg.validate()?;
        check_len("measurements", f.m(), y.len())?;
        let alpha = f.m() as f64 / f.n() as f64;
        let c = match cfg.c_init {
            InitialC::Fixed(c) => c,
            InitialC::ActivityQuantile => {
                let mut u: Vec<f64> = f.tr_mul_vec(y.values()).iter().map(|v| v.abs()).collect();
                let rank = f.m().min(u.len() - 1);
                u.select_nth_unstable_by(rank, |a, b| b.total_cmp(a));
                u[rank]
            }
        }
        .max(cfg.c_floor);
        let state = AmpState {
            x_hat: vec![0.0; f.n()],
            z: y.values().to_vec(),
            b_field: vec![0.0; f.n()],
            c_scalar: c,
            a_scalar: alpha / c,
            onsager: 0.0,
            iter: 0,
        };
        Ok(Self {
            f,
            y: y.values(),
            alpha,
            cfg,
            state,
            fx: vec![0.0; f.m()],
            ops: 0,
        })
    }

    pub fn state(&self) -> &AmpState {
        &self.state
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn ops(&self) -> u64 {
        self.ops
    }

    /// One update in the fixed order residual → field → estimate → scalars,
    /// each step reading the previous iterate's scalars. Returns `max |Δx̂|`.
    pub fn amp_sweep(&mut self) -> f64 {
        let (n, m) = (self.f.n(), self.f.m());
        let st = &mut self.state;

        for mu in 0..m {
            self.fx[mu] = dot(self.f.row(mu), &st.x_hat);
        }
        for mu in 0..m {
            st.z[mu] = self.y[mu] - self.fx[mu] + st.onsager * st.z[mu];
        }

        let c = st.c_scalar;
        let a = st.a_scalar;
        let ftz = self.f.tr_mul_vec(&st.z);
        let mut delta = 0.0f64;
        let mut active = 0usize;
        for ((x_i, b_i), g) in st.x_hat.iter_mut().zip(&mut st.b_field).zip(&ftz) {
            let b = g / c + (self.alpha / c) * *x_i;
            let x = shrink(b, a);
            delta = delta.max((x - *x_i).abs());
            active += usize::from(b.abs() > 1.0);
            *b_i = b;
            *x_i = x;
        }

        // N⁻¹ Σ Θ(|B_i|−1)/A with A = α/C.
        let frac = active as f64 / n as f64;
        let deriv_avg = frac * c / self.alpha;
        let gamma = self.cfg.damping;
        let c_new = ((1.0 - gamma) * deriv_avg + gamma * c).max(self.cfg.c_floor);
        st.c_scalar = c_new;
        st.a_scalar = self.alpha / c_new;
        st.onsager = frac / self.alpha;
        st.iter += 1;

        self.ops += 4 * (m as u64) * (n as u64) + 3 * m as u64 + 8 * n as u64 + 8;
        if delta.is_finite() {
            delta
        } else {
            f64::INFINITY
        }
    }

    /// The Onsager coefficient that the next sweep will apply,
    /// `N⁻¹Σf'(B_i;A) / C` at the previous scalars.
    pub fn onsager_coefficient(&self) -> f64 {
        self.state.onsager
    }

    pub fn run(&mut self, truth: Option<&SignalVector>) -> RecoveryResult {
        let mut converged = false;
        while self.state.iter < self.cfg.max_iters {
            let delta = self.amp_sweep();
            if !self.state.x_hat.iter().all(|v| v.is_finite()) {
                break;
            }
            if delta < self.cfg.convergence_tol
                && (self.state.iter > 1
                    || crate::bp::settled(
                        self.f.mul_vec(&self.state.x_hat),
                        self.y,
                        self.cfg.convergence_tol,
                    ))
            {
                converged = true;
                break;
            }
        }
        let fx = self.f.mul_vec(&self.state.x_hat);
        let residual: Vec<f64> = self.y.iter().zip(&fx).map(|(a, b)| a - b).collect();
        RecoveryResult::new(
            self.state.x_hat.clone(),
            self.state.iter,
            converged,
            &residual,
            truth,
            self.cfg.success_tol,
        )
    }
}

pub fn run_amp(
    f: &DenseMeasurementMatrix,
    y: &MeasurementVector,
    cfg: &AmpConfig,
    truth: Option<&SignalVector>,
) -> Result<RecoveryResult, SolverError> {
    if let Some(t) = truth {
        check_len("truth", f.n(), t.len())?;
    }
    Ok(AmpSolver::new(f, y, *cfg)?.run(truth))
}
