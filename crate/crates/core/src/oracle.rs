//! Exact `ℓ1` recovery at desk scale.
//!
//! `minimize Σ|x_i| subject to F x = y` is a linear program, so its minimum
//! is attained at a basic solution: one supported on a set of linearly
//! independent columns, hence on at most `M` entries. For `N ≤ 16` every
//! column subset can be tried. The result is cross-checked with the KKT
//! condition of the Lagrangian `λᵀ(Fx − y) + Σ|x_i|`, which asks for a `λ`
//! with `(Fᵀλ)_i = −sign(x_i)` on the support and `|(Fᵀλ)_i| ≤ 1` off it.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::instance::DenseMeasurementMatrix;
use crate::linalg::norm_inf;

/// Largest `N` accepted by [`brute_force_l1`].
pub const MAX_ORACLE_N: usize = 16;
/// A basic solution is consistent when `‖F_S x_S − y‖∞` is at most this.
pub const CONSISTENCY_TOL: f64 = 1e-9;
/// Two solutions are distinct when they differ by more than this anywhere;
/// two `ℓ1` values tie when they differ by at most this.
pub const UNIQUENESS_GAP: f64 = 1e-9;
/// Singular values below this fraction of the largest count as zero.
const RANK_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("brute force is limited to n ≤ {MAX_ORACLE_N}, got n = {0}")]
    TooLarge(usize),
    #[error("F has rank {rank} < m = {m}")]
    RankDeficient { rank: usize, m: usize },
    #[error("no basic solution reproduces y")]
    Inconsistent,
    #[error("{what}: expected length {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub x_star: Vec<f64>,
    pub l1_value: f64,
    /// No other basic solution attains the same `ℓ1` value.
    pub unique: bool,
    pub certificate_ok: bool,
}

fn to_matrix(f: &DenseMeasurementMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(f.m(), f.n(), f.values())
}

fn numerical_rank(a: &DMatrix<f64>) -> usize {
    let sv = a.singular_values();
    let top = sv.iter().cloned().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > RANK_RTOL * top && s > 0.0).count()
}

fn check_dims(f: &DenseMeasurementMatrix, y: &[f64], x: Option<&[f64]>) -> Result<(), OracleError> {
    if y.len() != f.m() {
        return Err(OracleError::DimensionMismatch {
            what: "measurements",
            expected: f.m(),
            found: y.len(),
        });
    }
    if let Some(x) = x {
        if x.len() != f.n() {
            return Err(OracleError::DimensionMismatch {
                what: "estimate",
                expected: f.n(),
                found: x.len(),
            });
        }
    }
    Ok(())
}

/// Least-squares solution on the columns `cols`, or `None` if they are
/// linearly dependent.
fn solve_subset(a: &DMatrix<f64>, y: &DVector<f64>, cols: &[usize]) -> Option<DVector<f64>> {
    let sub = a.select_columns(cols);
    let svd = sub.clone().svd(true, true);
    let top = svd.singular_values.max();
    if svd.singular_values.min() <= RANK_RTOL * top {
        return None;
    }
    svd.solve(y, 0.0).ok()
}

/// Minimum-`ℓ1` solution of `F x = y` by enumerating basic solutions.
pub fn brute_force_l1(f: &DenseMeasurementMatrix, y: &[f64]) -> Result<OracleResult, OracleError> {
    check_dims(f, y, None)?;
    let (n, m) = (f.n(), f.m());
    if n > MAX_ORACLE_N {
        return Err(OracleError::TooLarge(n));
    }
    let a = to_matrix(f);
    let rank = numerical_rank(&a);
    if rank < m {
        return Err(OracleError::RankDeficient { rank, m });
    }
    let yv = DVector::from_column_slice(y);

    // Distinct consistent basic solutions with their ℓ1 norms.
    let mut found: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut cols = Vec::with_capacity(m);
    for mask in 0u32..(1u32 << n) {
        if mask.count_ones() as usize > m {
            continue;
        }
        cols.clear();
        cols.extend((0..n).filter(|&i| mask >> i & 1 == 1));
        let mut x = vec![0.0; n];
        if !cols.is_empty() {
            let Some(xs) = solve_subset(&a, &yv, &cols) else {
                continue;
            };
            for (k, &i) in cols.iter().enumerate() {
                x[i] = xs[k];
            }
        }
        let fx = f.mul_vec(&x);
        if fx.iter().zip(y).any(|(p, q)| (p - q).abs() > CONSISTENCY_TOL) {
            continue;
        }
        let l1: f64 = x.iter().map(|v| v.abs()).sum();
        let seen = found.iter().any(|(_, other)| {
            other
                .iter()
                .zip(&x)
                .all(|(p, q)| (p - q).abs() <= UNIQUENESS_GAP)
        });
        if !seen {
            found.push((l1, x));
        }
    }

    let best = found
        .iter()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .ok_or(OracleError::Inconsistent)?
        .clone();
    let ties = found
        .iter()
        .filter(|(l1, _)| (l1 - best.0).abs() <= UNIQUENESS_GAP)
        .count();
    let certificate_ok = certify_l1_optimality(f, y, &best.1, 1e-6)?;
    Ok(OracleResult {
        x_star: best.1,
        l1_value: best.0,
        unique: ties == 1,
        certificate_ok,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CertificateFailure {
    EmptySupport,
    PrimalInfeasible { residual: f64 },
    Stationarity { residual: f64 },
    DualInfeasible { max_off_support: f64 },
}

impl std::fmt::Display for CertificateFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::EmptySupport => write!(f, "x is zero but y is not"),
            Self::PrimalInfeasible { residual } => write!(f, "‖Fx − y‖∞ = {residual:e}"),
            Self::Stationarity { residual } => {
                write!(f, "support equations unsolvable, residual {residual:e}")
            }
            Self::DualInfeasible { max_off_support } => {
                write!(f, "best off-support |Fᵀλ| is {max_off_support}")
            }
        }
    }
}

/// KKT check with the multiplier that witnesses it.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub lambda: Vec<f64>,
    pub outcome: Result<(), CertificateFailure>,
}

/// Searches for a dual certificate of `x_hat`.
///
/// The support equations `F_Sᵀλ = −sign(x̂_S)` are first solved in the
/// minimum-norm least-squares sense. When `|S| < M` that `λ` is only one of
/// many; if it violates `|(Fᵀλ)_j| ≤ 1` off the support, a small LP looks for
/// the `λ` that minimizes the largest off-support value under the same
/// equalities.
pub fn check_certificate(
    f: &DenseMeasurementMatrix,
    y: &[f64],
    x_hat: &[f64],
    tol: f64,
) -> Result<Certificate, OracleError> {
    check_dims(f, y, Some(x_hat))?;
    let (n, m) = (f.n(), f.m());
    let fail = |lambda: Vec<f64>, why| Ok(Certificate {
        lambda,
        outcome: Err(why),
    });

    let support: Vec<usize> = (0..n).filter(|&i| x_hat[i].abs() > tol).collect();
    let y_scale = 1.0 + norm_inf(y);
    if support.is_empty() && norm_inf(y) > tol * y_scale {
        return fail(vec![0.0; m], CertificateFailure::EmptySupport);
    }
    let fx = f.mul_vec(x_hat);
    let residual = fx.iter().zip(y).fold(0.0f64, |r, (p, q)| r.max((p - q).abs()));
    if residual > tol * y_scale {
        return fail(vec![0.0; m], CertificateFailure::PrimalInfeasible { residual });
    }
    if support.is_empty() {
        return Ok(Certificate {
            lambda: vec![0.0; m],
            outcome: Ok(()),
        });
    }

    let a = to_matrix(f);
    let a_s_t = a.select_columns(&support).transpose();
    let rhs = DVector::from_iterator(support.len(), support.iter().map(|&i| -x_hat[i].signum()));
    let svd = a_s_t.clone().svd(true, true);
    let cutoff = RANK_RTOL * svd.singular_values.max();
    let lambda = svd.solve(&rhs, cutoff).expect("U and V were computed");
    let stat = (&a_s_t * &lambda - &rhs).amax();
    if stat > tol {
        return fail(lambda.as_slice().to_vec(), CertificateFailure::Stationarity { residual: stat });
    }
    let off: Vec<usize> = (0..n).filter(|i| !support.contains(i)).collect();
    let worst = |l: &DVector<f64>| {
        off.iter()
            .map(|&j| a.column(j).dot(l).abs())
            .fold(0.0, f64::max)
    };
    if worst(&lambda) <= 1.0 + tol {
        return Ok(Certificate {
            lambda: lambda.as_slice().to_vec(),
            outcome: Ok(()),
        });
    }

    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = (0..m)
        .map(|_| lp.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY)))
        .collect();
    let t = lp.add_var(1.0, (0.0, f64::INFINITY));
    for (k, &i) in support.iter().enumerate() {
        let row: Vec<_> = (0..m).map(|mu| (vars[mu], a[(mu, i)])).collect();
        lp.add_constraint(row.as_slice(), ComparisonOp::Eq, rhs[k]);
    }
    for &j in &off {
        let mut up: Vec<_> = (0..m).map(|mu| (vars[mu], a[(mu, j)])).collect();
        up.push((t, -1.0));
        lp.add_constraint(up.as_slice(), ComparisonOp::Le, 0.0);
        let mut down: Vec<_> = (0..m).map(|mu| (vars[mu], a[(mu, j)])).collect();
        down.push((t, 1.0));
        lp.add_constraint(down.as_slice(), ComparisonOp::Ge, 0.0);
    }
    let Ok(sol) = lp.solve() else {
        let w = worst(&lambda);
        return fail(lambda.as_slice().to_vec(), CertificateFailure::DualInfeasible { max_off_support: w });
    };
    let refined = DVector::from_iterator(m, vars.iter().map(|&v| sol[v]));
    let stat = (&a_s_t * &refined - &rhs).amax();
    let w = worst(&refined);
    let lambda = refined.as_slice().to_vec();
    if stat > tol {
        return fail(lambda, CertificateFailure::Stationarity { residual: stat });
    }
    if w > 1.0 + tol {
        return fail(lambda, CertificateFailure::DualInfeasible { max_off_support: w });
    }
    Ok(Certificate {
        lambda,
        outcome: Ok(()),
    })
}

/// `true` iff [`check_certificate`] finds a valid multiplier.
pub fn certify_l1_optimality(
    f: &DenseMeasurementMatrix,
    y: &[f64],
    x_hat: &[f64],
    tol: f64,
) -> Result<bool, OracleError> {
    Ok(check_certificate(f, y, x_hat, tol)?.outcome.is_ok())
}
