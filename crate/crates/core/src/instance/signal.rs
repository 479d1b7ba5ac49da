use rand::Rng;
use rand_distr::StandardNormal;

use super::{InstanceError, RngSeed};

/// Original signal `x⁰` together with the density it was drawn at.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalVector {
    values: Vec<f64>,
    density: f64,
}

impl SignalVector {
    pub fn new(values: Vec<f64>, density: f64) -> Self {
        Self { values, density }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn density(&self) -> f64 {
        self.density
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn support_size(&self) -> usize {
        self.values.iter().filter(|v| **v != 0.0).count()
    }
}

/// Measurements `y = F x⁰`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementVector {
    values: Vec<f64>,
}

impl MeasurementVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Bernoulli–Gaussian signal: each entry is `N(0, 1)` with probability `rho`
/// and exactly zero otherwise.
pub fn gen_signal(n: usize, rho: f64, seed: RngSeed) -> Result<SignalVector, InstanceError> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(InstanceError::InvalidSpec(format!(
            "signal density must lie in [0, 1], got {rho}"
        )));
    }
    let mut rng = seed.rng();
    let values = (0..n)
        .map(|_| {
            if rng.random::<f64>() < rho {
                rng.sample(StandardNormal)
            } else {
                0.0
            }
        })
        .collect();
    Ok(SignalVector::new(values, rho))
}
