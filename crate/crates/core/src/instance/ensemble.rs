use super::InstanceError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnsembleKind {
    /// Exactly `j` nonzeros per column and `k` per row.
    RegularSparse { j: usize, k: usize },
    /// Every entry i.i.d. `N(0, 1/N)`.
    DenseGaussian,
}

/// Dimensions and ensemble of a measurement matrix (`m` rows, `n` columns).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnsembleSpec {
    pub n: usize,
    pub m: usize,
    pub kind: EnsembleKind,
}

impl EnsembleSpec {
    pub fn regular(n: usize, m: usize, j: usize, k: usize) -> Result<Self, InstanceError> {
        let spec = Self {
            n,
            m,
            kind: EnsembleKind::RegularSparse { j, k },
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Regular ensemble with `m = n·j/k`.
    pub fn regular_for_n(n: usize, j: usize, k: usize) -> Result<Self, InstanceError> {
        if k == 0 || (n * j) % k != 0 {
            return Err(InstanceError::InvalidSpec(format!(
                "n·j = {} is not divisible by k = {k}",
                n * j
            )));
        }
        Self::regular(n, n * j / k, j, k)
    }

    pub fn dense(n: usize, m: usize) -> Result<Self, InstanceError> {
        let spec = Self {
            n,
            m,
            kind: EnsembleKind::DenseGaussian,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn alpha(&self) -> f64 {
        self.m as f64 / self.n as f64
    }

    pub fn validate(&self) -> Result<(), InstanceError> {
        let bad = |msg: String| Err(InstanceError::InvalidSpec(msg));
        if self.n == 0 || self.m == 0 {
            return bad(format!("dimensions must be positive, got n={} m={}", self.n, self.m));
        }
        if self.m >= self.n {
            return bad(format!("need m < n, got n={} m={}", self.n, self.m));
        }
        if let EnsembleKind::RegularSparse { j, k } = self.kind {
            if j < 2 || k < 2 {
                return bad(format!("degrees must be at least 2, got j={j} k={k}"));
            }
            if j > self.m || k > self.n {
                return bad(format!(
                    "degrees exceed dimensions: j={j} > m={} or k={k} > n={}",
                    self.m, self.n
                ));
            }
            if self.n * j != self.m * k {
                return bad(format!(
                    "edge counts disagree: n·j = {} but m·k = {}",
                    self.n * j,
                    self.m * k
                ));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_ten_twenty_ensemble() {
        let s = EnsembleSpec::regular(40, 20, 10, 20).unwrap();
        assert_eq!(s.alpha(), 0.5);
        assert_eq!(EnsembleSpec::regular_for_n(3200, 10, 20).unwrap().m, 1600);
    }

    #[test]
    fn rejects_inconsistent_edge_count() {
        assert!(EnsembleSpec::regular(40, 20, 10, 19).is_err());
        assert!(EnsembleSpec::regular_for_n(41, 10, 20).is_err());
    }

    #[test]
    fn rejects_degenerate_degrees_and_shapes() {
        assert!(EnsembleSpec::regular(40, 20, 1, 2).is_err());
        assert!(EnsembleSpec::regular(4, 2, 3, 6).is_err());
        assert!(EnsembleSpec::dense(10, 10).is_err());
        assert!(EnsembleSpec::dense(0, 0).is_err());
        assert!(EnsembleSpec::dense(10, 5).is_ok());
    }
}
