//! Output shared by the message-passing solvers.

use thiserror::Error;

use crate::instance::SignalVector;
use crate::linalg::{mse, norm_inf};

/// Perfect-recovery criterion: `N⁻¹ Σ (x̂_i − x⁰_i)² < SUCCESS_MSE`.
pub const SUCCESS_MSE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("{what}: expected length {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("column {column} has fewer than two edges; its cavity sums are empty")]
    DegenerateColumn { column: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub(crate) fn check_len(what: &'static str, expected: usize, found: usize) -> Result<(), SolverError> {
    if expected != found {
        return Err(SolverError::DimensionMismatch {
            what,
            expected,
            found,
        });
    }
    Ok(())
}

/// Final estimate and diagnostics of a solver run.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryResult {
    pub x_hat: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// `‖y − F x̂‖∞`.
    pub residual_inf: f64,
    pub mse_vs_truth: Option<f64>,
    /// `mse_vs_truth < success_tol`, present only when the truth was supplied.
    pub success: Option<bool>,
}

impl RecoveryResult {
    pub(crate) fn new(
        x_hat: Vec<f64>,
        iterations: usize,
        converged: bool,
        residual: &[f64],
        truth: Option<&SignalVector>,
        success_tol: f64,
    ) -> Self {
        let mse_vs_truth = truth.map(|t| mse(&x_hat, t.values()));
        let success = mse_vs_truth.map(|e| e < success_tol);
        Self {
            x_hat,
            iterations,
            converged,
            residual_inf: norm_inf(residual),
            mse_vs_truth,
            success,
        }
    }

    pub fn succeeded(&self) -> bool {
        self.success == Some(true)
    }
}
