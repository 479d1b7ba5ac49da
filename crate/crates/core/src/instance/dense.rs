use rand_distr::{Distribution, StandardNormal};

use super::{EnsembleKind, EnsembleSpec, InstanceError, MeasurementVector, RngSeed, SignalVector};
use crate::linalg::{axpy, dot};

/// Row-major `m × n` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMeasurementMatrix {
    n: usize,
    m: usize,
    values: Vec<f64>,
}

impl DenseMeasurementMatrix {
    pub fn new(n: usize, m: usize, values: Vec<f64>) -> Result<Self, InstanceError> {
        if values.len() != n * m {
            return Err(InstanceError::DimensionMismatch {
                what: "dense matrix values",
                expected: n * m,
                found: values.len(),
            });
        }
        if let Some(&value) = values.iter().find(|v| !v.is_finite()) {
            return Err(InstanceError::NonFinite {
                what: "matrix entry",
                value,
            });
        }
        Ok(Self { n, m, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, InstanceError> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(n * m);
        for r in rows {
            if r.len() != n {
                return Err(InstanceError::DimensionMismatch {
                    what: "matrix row",
                    expected: n,
                    found: r.len(),
                });
            }
            values.extend_from_slice(r);
        }
        Self::new(n, m, values)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, mu: usize, i: usize) -> f64 {
        self.values[mu * self.n + i]
    }

    pub fn row(&self, mu: usize) -> &[f64] {
        &self.values[mu * self.n..(mu + 1) * self.n]
    }

    /// `F x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.m).map(|mu| dot(self.row(mu), x)).collect()
    }

    /// `Fᵀ z`.
    pub fn tr_mul_vec(&self, z: &[f64]) -> Vec<f64> {
        assert_eq!(z.len(), self.m);
        let mut out = vec![0.0; self.n];
        for (mu, &zm) in z.iter().enumerate() {
            axpy(zm, self.row(mu), &mut out);
        }
        out
    }

    pub fn measure(&self, x: &SignalVector) -> Result<MeasurementVector, InstanceError> {
        if x.len() != self.n {
            return Err(InstanceError::DimensionMismatch {
                what: "signal",
                expected: self.n,
                found: x.len(),
            });
        }
        Ok(MeasurementVector::new(self.mul_vec(x.values())))
    }

    /// Column sums of squared entries, `Σ_μ F²_{μi}`.
    pub fn column_norms_sq(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for mu in 0..self.m {
            for (o, v) in out.iter_mut().zip(self.row(mu)) {
                *o += v * v;
            }
        }
        out
    }

    /// The submatrix made of the given columns, in order.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let mut values = Vec::with_capacity(self.m * cols.len());
        for mu in 0..self.m {
            let row = self.row(mu);
            values.extend(cols.iter().map(|&i| row[i]));
        }
        Self {
            n: cols.len(),
            m: self.m,
            values,
        }
    }
}

/// Draws an `m × n` matrix with i.i.d. `N(0, 1/n)` entries.
pub fn gen_dense_matrix(
    spec: &EnsembleSpec,
    seed: RngSeed,
) -> Result<DenseMeasurementMatrix, InstanceError> {
    spec.validate()?;
    if spec.kind != EnsembleKind::DenseGaussian {
        return Err(InstanceError::InvalidSpec(
            "a dense Gaussian ensemble is required".into(),
        ));
    }
    let scale = 1.0 / (spec.n as f64).sqrt();
    let mut rng = seed.rng();
    let values = (0..spec.n * spec.m)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            scale * z
        })
        .collect();
    DenseMeasurementMatrix::new(spec.n, spec.m, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        let spec = EnsembleSpec::dense(50, 20).unwrap();
        let a = gen_dense_matrix(&spec, RngSeed::new(3, 0)).unwrap();
        let b = gen_dense_matrix(&spec, RngSeed::new(3, 0)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, gen_dense_matrix(&spec, RngSeed::new(3, 1)).unwrap());
    }

    #[test]
    fn column_norms_concentrate_near_alpha() {
        let spec = EnsembleSpec::dense(1000, 500).unwrap();
        let f = gen_dense_matrix(&spec, RngSeed::new(17, 0)).unwrap();
        let norms = f.column_norms_sq();
        for (i, c) in norms.iter().enumerate() {
            assert!((c - 0.5).abs() <= 0.15, "column {i}: {c}");
        }
        let avg = norms.iter().sum::<f64>() / 1000.0;
        assert!((avg - 0.5).abs() <= 0.01, "average {avg}");
    }

    #[test]
    fn entry_variance_is_one_over_n() {
        let spec = EnsembleSpec::dense(1000, 500).unwrap();
        let f = gen_dense_matrix(&spec, RngSeed::new(18, 0)).unwrap();
        let count = f.values().len() as f64;
        let mean = f.values().iter().sum::<f64>() / count;
        let var = f.values().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1.0);
        // Sample variance of 5e5 Gaussians has relative std √(2/5e5) ≈ 0.2 %,
        // so ±10 % is a loose band.
        let target = 1.0 / 1000.0;
        assert!((var / target - 1.0).abs() < 0.1, "variance {var}");
        assert!((2.0f64 / count).sqrt() < 0.01);
    }

    #[test]
    fn products_by_hand() {
        let f = DenseMeasurementMatrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        assert_eq!(f.mul_vec(&[3.0, -1.0]), vec![1.0]);
        assert_eq!(f.tr_mul_vec(&[2.0]), vec![2.0, 4.0]);
        let y = f.measure(&SignalVector::new(vec![0.0, 0.0], 0.0)).unwrap();
        assert_eq!(y.values(), &[0.0]);
    }

    #[test]
    fn rejects_ragged_and_non_finite() {
        assert!(DenseMeasurementMatrix::from_rows(&[vec![1.0, 2.0], vec![1.0]]).is_err());
        assert!(DenseMeasurementMatrix::new(2, 1, vec![1.0, f64::NAN]).is_err());
        assert!(DenseMeasurementMatrix::new(2, 1, vec![1.0]).is_err());
    }
}
