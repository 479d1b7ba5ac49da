//! Problem instances: measurement matrices, signals and measurements.
//!
//! Two matrix ensembles are supported. The regular `(j, k)` ensemble places
//! exactly `j` nonzeros in every column and `k` in every row at random
//! positions, each value drawn from `N(0, 1)`. The dense ensemble draws every
//! entry from `N(0, 1/N)`. Signals are Bernoulli–Gaussian: each entry is zero
//! with probability `1 − ρ` and standard normal otherwise.
//!
//! Every generator is a pure function of its spec and an [`RngSeed`].

mod dense;
mod ensemble;
mod io;
mod rng;
mod signal;
mod sparse;

use thiserror::Error;

pub use dense::{gen_dense_matrix, DenseMeasurementMatrix};
pub use ensemble::{EnsembleKind, EnsembleSpec};
pub use io::{load_instance, parse_instance, save_instance, write_instance, Instance};
pub use rng::{splitmix64, RngSeed, STREAM_MATRIX, STREAM_SHUFFLE, STREAM_SIGNAL};
pub use signal::{gen_signal, MeasurementVector, SignalVector};
pub use sparse::{
    gen_regular_sparse_matrix, gen_regular_sparse_matrix_with, Edge, SparseMeasurementMatrix,
    PAIRING_ATTEMPTS,
};

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("invalid ensemble: {0}")]
    InvalidSpec(String),
    #[error("could not build a simple regular graph in {attempts} pairing attempts")]
    PairingFailed { attempts: usize },
    #[error("{what}: expected length {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("duplicate edge (row {row}, column {col})")]
    DuplicateEdge { row: usize, col: usize },
    #[error("edge (row {row}, column {col}) outside a {m}x{n} matrix")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        m: usize,
        n: usize,
    },
    #[error("non-finite value {value} in {what}")]
    NonFinite { what: &'static str, value: f64 },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A measurement matrix from either ensemble.
#[derive(Debug, Clone, PartialEq)]
pub enum MeasurementMatrix {
    Sparse(SparseMeasurementMatrix),
    Dense(DenseMeasurementMatrix),
}

impl MeasurementMatrix {
    pub fn n(&self) -> usize {
        match self {
            Self::Sparse(f) => f.n(),
            Self::Dense(f) => f.n(),
        }
    }

    pub fn m(&self) -> usize {
        match self {
            Self::Sparse(f) => f.m(),
            Self::Dense(f) => f.m(),
        }
    }

    pub fn measure(&self, x: &SignalVector) -> Result<MeasurementVector, InstanceError> {
        match self {
            Self::Sparse(f) => f.measure(x),
            Self::Dense(f) => f.measure(x),
        }
    }

    pub fn to_dense(&self) -> DenseMeasurementMatrix {
        match self {
            Self::Sparse(f) => f.to_dense(),
            Self::Dense(f) => f.clone(),
        }
    }
}

impl From<SparseMeasurementMatrix> for MeasurementMatrix {
    fn from(f: SparseMeasurementMatrix) -> Self {
        Self::Sparse(f)
    }
}

impl From<DenseMeasurementMatrix> for MeasurementMatrix {
    fn from(f: DenseMeasurementMatrix) -> Self {
        Self::Dense(f)
    }
}
