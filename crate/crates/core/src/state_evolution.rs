//! Macroscopic recursion for the dense-limit solver and the resulting
//! perfect-recovery threshold.
//!
//! With `x⁰ ~ (1−ρ)δ + ρN(0,1)` and `z ~ N(0,1)`, the effective field is
//! `B = (α/C)x⁰ + (√(αE)/C)z` with `E = Q − 2m + Q₀`, and
//! `x̂ = f(B; α/C)`. In the units `θ = C/α`, `σ² = E/α` this is plain soft
//! thresholding of `x⁰ + σz` at level `θ`, which is what every moment below
//! is computed for.

use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::{erf, erfc};
use thiserror::Error;

/// `mse` below which a trajectory counts as recovered.
pub const RECOVERED_MSE: f64 = 1e-10;
/// `mse` above which a stationary trajectory counts as stalled.
pub const STALLED_MSE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

fn invalid<T>(msg: String) -> Result<T, SeError> {
    Err(SeError::InvalidArgument(msg))
}

fn check_params(rho: f64, alpha: f64) -> Result<(), SeError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return invalid(format!("alpha must lie in (0, 1), got {alpha}"));
    }
    if !(0.0..=1.0).contains(&rho) {
        return invalid(format!("rho must lie in [0, 1], got {rho}"));
    }
    Ok(())
}

/// Macroscopic state after one update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacroState {
    /// `N⁻¹ Σ x⁰_i x̂_i`.
    pub m: f64,
    /// `N⁻¹ Σ x̂_i²`.
    pub q: f64,
    /// The `C` that produced `(m, q)`; `+∞` in the absorbing recovered state.
    pub c: f64,
    pub rho: f64,
    pub alpha: f64,
    /// `⟨(x⁰)²⟩ = ρ` for the standard-normal prior.
    pub q0: f64,
    /// `q − 2m + q0`, evaluated in a cancellation-free form and clipped at 0.
    pub mse: f64,
    /// Fraction of variables outside the dead zone, `P(|B| > 1)`.
    pub active: f64,
}

impl MacroState {
    /// `m = q = 0`, so `mse = q0`: the solvers' zero initialization. `c` is
    /// the self-consistent value at that `mse`.
    pub fn initial(rho: f64, alpha: f64) -> Result<Self, SeError> {
        check_params(rho, alpha)?;
        let c = solve_c(rho, rho, alpha)?;
        Ok(Self {
            m: 0.0,
            q: 0.0,
            c,
            rho,
            alpha,
            q0: rho,
            mse: rho,
            active: if c.is_finite() { alpha } else { rho },
        })
    }

    fn absorbing(rho: f64, alpha: f64) -> Self {
        Self {
            m: rho,
            q: rho,
            c: f64::INFINITY,
            rho,
            alpha,
            q0: rho,
            mse: 0.0,
            active: rho,
        }
    }

    pub fn a(&self) -> f64 {
        self.alpha / self.c
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub nodes: usize,
    /// Integration range in standard deviations.
    pub cutoff: f64,
    /// Relative `mse` change treated as stationary.
    pub fixed_point_tol: f64,
    pub max_iters: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            nodes: 201,
            cutoff: 10.0,
            fixed_point_tol: 1e-12,
            max_iters: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentMethod {
    ClosedForm,
    Quadrature,
}

/// How `C` is obtained at each update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CSchedule {
    /// Exact root of the `C` equation at the current `mse`.
    SelfConsistent,
    /// `C_t = (1−γ)·N⁻¹Σf'(B; α/C_{t−1}) + γ·C_{t−1}`: the dense solver's
    /// scalar refresh, started from the self-consistent value.
    Lagged { damping: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeConfig {
    pub quad: QuadratureSpec,
    pub moments: MomentMethod,
    pub schedule: CSchedule,
}

impl Default for SeConfig {
    fn default() -> Self {
        Self {
            quad: QuadratureSpec::default(),
            moments: MomentMethod::ClosedForm,
            schedule: CSchedule::SelfConsistent,
        }
    }
}

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Standard normal upper tail.
fn q_tail(t: f64) -> f64 {
    0.5 * erfc(t / SQRT_2)
}

fn phi(t: f64) -> f64 {
    (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// `E[(σz − θ)² ; σz > θ]·2 / σ² = 2[(1+t²)Q(t) − tφ(t)]`, stable for large `t`.
fn tail_second_moment(t: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    2.0 * ((1.0 + t * t) * q_tail(t) - t * phi(t))
}

/// `P(|αx⁰ + √(αE)z| > C)` in the `(θ, σ)` units.
fn active_fraction(theta: f64, sigma: f64, rho: f64) -> f64 {
    let s = (1.0 + sigma * sigma).sqrt();
    let zero = if sigma > 0.0 {
        2.0 * q_tail(theta / sigma)
    } else {
        0.0
    };
    rho * 2.0 * q_tail(theta / s) + (1.0 - rho) * zero
}

/// Solves `P(|αx⁰ + √(αE)z| > C) = α` for `C`.
///
/// Returns `+∞` when no root exists, which happens exactly when `E = 0` and
/// `ρ ≤ α`: the estimate is then exact and the trajectory is absorbed.
pub fn solve_c(mse: f64, rho: f64, alpha: f64) -> Result<f64, SeError> {
    check_params(rho, alpha)?;
    if !(mse >= 0.0 && mse.is_finite()) {
        return invalid(format!("mse must be finite and nonnegative, got {mse}"));
    }
    if mse == 0.0 && rho <= alpha {
        return Ok(f64::INFINITY);
    }
    let sigma = (mse / alpha).sqrt();
    let g = |theta: f64| active_fraction(theta, sigma, rho) - alpha;
    let mut hi = 1.0;
    while g(hi) > 0.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    while hi - lo > 1e-12 * hi {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(alpha * 0.5 * (lo + hi))
}

/// `erf(t/√2) − 2tφ(t) = E[z²; |z| < t]`, which vanishes like `t³`. The
/// difference cancels for small `t`, where the regularized incomplete gamma
/// series `P(3/2, t²/2)` is used instead.
fn gaussian_core_mass(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 0.5 {
        return erf(t / SQRT_2) - 2.0 * t * phi(t);
    }
    let x = 0.5 * t * t;
    let (mut term, mut sum, mut a) = (1.0, 1.0, 1.5);
    while term > 1e-17 * sum {
        a += 1.0;
        term *= x / a;
        sum += term;
    }
    // x^{3/2} e^{−x} / Γ(5/2), Γ(5/2) = 3√π/4.
    x.powf(1.5) * (-x).exp() / (0.75 * std::f64::consts::PI.sqrt()) * sum
}

/// `(active, m, q, mse)` for soft thresholding of `x⁰ + σz` at `θ`.
fn moments_closed(theta: f64, sigma: f64, rho: f64) -> (f64, f64, f64, f64) {
    let s2 = 1.0 + sigma * sigma;
    let s = s2.sqrt();
    let t1 = theta / s;
    let (q1, p1) = (q_tail(t1), phi(t1));
    let g = gaussian_core_mass(t1);
    let err_g = g - 2.0 * sigma * sigma * t1 * p1 + 2.0 * (sigma * sigma + theta * theta) * q1;
    let m_g = 2.0 * q1;
    let q_g = s2 * tail_second_moment(t1);

    let (frac_0, q_0) = if sigma > 0.0 {
        let t0 = theta / sigma;
        (2.0 * q_tail(t0), sigma * sigma * tail_second_moment(t0))
    } else {
        (0.0, 0.0)
    };
    let active = rho * 2.0 * q1 + (1.0 - rho) * frac_0;
    let mse = rho * err_g + (1.0 - rho) * q_0;
    (active, rho * m_g, rho * q_g + (1.0 - rho) * q_0, mse.max(0.0))
}

/// Gauss–Legendre nodes and weights on `[−1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = nf * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// `∫_lo^hi g` with the rule mapped onto the interval.
fn integrate(rule: &(Vec<f64>, Vec<f64>), lo: f64, hi: f64, g: impl Fn(f64) -> f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
    rule.0
        .iter()
        .zip(&rule.1)
        .map(|(&t, &w)| w * g(mid + half * t))
        .sum::<f64>()
        * half
}

/// Quadrature counterpart of [`moments_closed`]: the `z` average of the
/// zero component and the `x⁰` average of the Gaussian component are done
/// numerically; for fixed `x⁰` the `z` average uses shifted-Gaussian
/// soft-threshold moments.
fn moments_quadrature(theta: f64, sigma: f64, rho: f64, quad: &QuadratureSpec) -> (f64, f64, f64, f64) {
    let rule = gauss_legendre(quad.nodes);
    let cut = quad.cutoff;

    let (frac_0, q_0) = if sigma > 0.0 {
        let t0 = theta / sigma;
        let frac = 2.0 * integrate(&rule, t0, cut, phi);
        let q = 2.0 * integrate(&rule, t0, cut, |z| sigma * sigma * (z - t0).powi(2) * phi(z));
        (frac, q)
    } else {
        (0.0, 0.0)
    };

    // For x⁰ = μ: u = μ + σz, a = (θ−μ)/σ, b = (θ+μ)/σ.
    let inner = |mu: f64| -> (f64, f64, f64) {
        if sigma == 0.0 {
            let eta = if mu.abs() > theta { mu - theta * mu.signum() } else { 0.0 };
            return (f64::from(u8::from(mu.abs() > theta)), eta, eta * eta);
        }
        let a = (theta - mu) / sigma;
        let b = (theta + mu) / sigma;
        let p = q_tail(a) + q_tail(b);
        let e1 = sigma * ((phi(a) - a * q_tail(a)) - (phi(b) - b * q_tail(b)));
        let e2 = 0.5 * sigma * sigma * (tail_second_moment(a) + tail_second_moment(b));
        (p, e1, e2)
    };
    let frac_g = integrate(&rule, -cut, cut, |mu| phi(mu) * inner(mu).0);
    let m_g = integrate(&rule, -cut, cut, |mu| phi(mu) * mu * inner(mu).1);
    let q_g = integrate(&rule, -cut, cut, |mu| phi(mu) * inner(mu).2);
    let err_g = integrate(&rule, -cut, cut, |mu| {
        let (_, e1, e2) = inner(mu);
        phi(mu) * (e2 - 2.0 * mu * e1 + mu * mu)
    });

    let active = rho * frac_g + (1.0 - rho) * frac_0;
    let mse = rho * err_g + (1.0 - rho) * q_0;
    (active, rho * m_g, rho * q_g + (1.0 - rho) * q_0, mse.max(0.0))
}

fn moments(theta: f64, sigma: f64, rho: f64, cfg: &SeConfig) -> (f64, f64, f64, f64) {
    match cfg.moments {
        MomentMethod::ClosedForm => moments_closed(theta, sigma, rho),
        MomentMethod::Quadrature => moments_quadrature(theta, sigma, rho, &cfg.quad),
    }
}

/// One application of the macroscopic map.
pub fn se_update(s: &MacroState, cfg: &SeConfig) -> Result<MacroState, SeError> {
    let (rho, alpha) = (s.rho, s.alpha);
    check_params(rho, alpha)?;
    let c = match cfg.schedule {
        CSchedule::SelfConsistent => solve_c(s.mse, rho, alpha)?,
        CSchedule::Lagged { damping } => {
            if !(0.0..1.0).contains(&damping) {
                return invalid(format!("damping must lie in [0, 1), got {damping}"));
            }
            if s.c.is_finite() {
                let deriv_avg = s.active * s.c / alpha;
                (1.0 - damping) * deriv_avg + damping * s.c
            } else {
                f64::INFINITY
            }
        }
    };
    if !c.is_finite() {
        return Ok(MacroState::absorbing(rho, alpha));
    }
    let theta = c / alpha;
    let sigma = (s.mse / alpha).sqrt();
    let (active, m, q, mse) = moments(theta, sigma, rho, cfg);
    Ok(MacroState {
        m,
        q,
        c,
        rho,
        alpha,
        q0: rho,
        mse,
        active,
    })
}

/// States after updates `1..=iters`, starting from [`MacroState::initial`].
pub fn trajectory(rho: f64, alpha: f64, cfg: &SeConfig, iters: usize) -> Result<Vec<MacroState>, SeError> {
    let mut s = MacroState::initial(rho, alpha)?;
    let mut out = Vec::with_capacity(iters);
    for _ in 0..iters {
        s = se_update(&s, cfg)?;
        out.push(s);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    Recovered { iterations: usize },
    Stalled { iterations: usize, mse: f64 },
}

impl Outcome {
    pub fn recovered(&self) -> bool {
        matches!(self, Outcome::Recovered { .. })
    }
}

/// Runs the map from `mse = q0` until it drops below [`RECOVERED_MSE`] or
/// becomes stationary above [`STALLED_MSE`]. A trajectory still moving at the
/// iteration cap counts as recovered iff its `mse` is below [`STALLED_MSE`].
pub fn classify(rho: f64, alpha: f64, cfg: &SeConfig) -> Result<Outcome, SeError> {
    let mut s = MacroState::initial(rho, alpha)?;
    if s.mse < RECOVERED_MSE {
        return Ok(Outcome::Recovered { iterations: 0 });
    }
    for t in 1..=cfg.quad.max_iters {
        let next = se_update(&s, cfg)?;
        if next.mse < RECOVERED_MSE {
            return Ok(Outcome::Recovered { iterations: t });
        }
        if (next.mse - s.mse).abs() <= cfg.quad.fixed_point_tol * s.mse && next.mse > STALLED_MSE {
            return Ok(Outcome::Stalled {
                iterations: t,
                mse: next.mse,
            });
        }
        s = next;
    }
    Ok(if s.mse < STALLED_MSE {
        Outcome::Recovered {
            iterations: cfg.quad.max_iters,
        }
    } else {
        Outcome::Stalled {
            iterations: cfg.quad.max_iters,
            mse: s.mse,
        }
    })
}

/// Bisects on `ρ ∈ [0, α]` for the recovery boundary; returns the midpoint
/// of the final bracket.
pub fn find_threshold(alpha: f64, cfg: &SeConfig, bisect_tol: f64) -> Result<f64, SeError> {
    check_params(0.0, alpha)?;
    if !(bisect_tol > 0.0) {
        return invalid(format!("bisect_tol must be positive, got {bisect_tol}"));
    }
    let (mut lo, mut hi) = (0.0, alpha);
    while hi - lo > bisect_tol {
        let mid = 0.5 * (lo + hi);
        if classify(mid, alpha, cfg)?.recovered() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `Φ⁻¹(p)` for the standard normal.
pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}
