//! Low-cost signal recovery for compressed sensing with sparse measurement
//! matrices.
//!
//! The central algorithm is belief propagation on the bipartite graph of a
//! sparse matrix `F`, applied to the constrained problem
//! `minimize Σ|x_i| subject to F x = y`, with every message restricted to a
//! (piecewise) quadratic form. Each directed edge therefore carries two
//! scalars instead of a function:
//!
//! * variable to check: `½ A x² − B x + |x|`
//! * check to variable: `−½ C λ² + (D − y) λ`
//!
//! Around it the crate provides
//!
//! * [`instance`]: regular `(j, k)` sparse and dense Gaussian ensembles,
//!   Bernoulli–Gaussian signals, measurements and a text file format;
//! * [`kernel`]: the soft-thresholding nonlinearity shared by every solver;
//! * [`bp`]: the edge-message solver;
//! * [`amp`]: its dense-matrix limit with the Onsager-corrected residual;
//! * [`state_evolution`]: macroscopic `(m, Q, C)` recursion and the
//!   perfect-recovery threshold;
//! * [`oracle`]: brute-force `ℓ1` minimizer and a KKT dual certificate for
//!   desk-sized problems;
//! * [`experiments`]: seeded Monte-Carlo phase-transition sweeps, CSV and SVG
//!   output.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod amp;
pub mod bp;
pub mod experiments;
pub mod instance;
pub mod kernel;
pub mod linalg;
pub mod oracle;
pub mod recovery;
pub mod state_evolution;

pub use amp::{run_amp, AmpConfig, AmpSolver, AmpState, InitialC};
pub use bp::{run_bp, BpConfig, BpSolver, EdgeMessageState};
pub use instance::{
    gen_dense_matrix, gen_regular_sparse_matrix, gen_signal, load_instance, save_instance,
    DenseMeasurementMatrix, EnsembleKind, EnsembleSpec, Instance, InstanceError,
    MeasurementMatrix, MeasurementVector, RngSeed, SignalVector, SparseMeasurementMatrix,
};
pub use kernel::{soft_threshold, soft_threshold_deriv, KernelError, ThresholdPair};
pub use recovery::{RecoveryResult, SolverError, SUCCESS_MSE};
