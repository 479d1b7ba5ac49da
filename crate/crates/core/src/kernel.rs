//! Soft-thresholding nonlinearity.
//!
//! Minimizing `½ A x² − B x + |x|` over `x` gives
//!
//! ```text
//! f(B; A) = (B − sign(B)) Θ(|B| − 1) / A
//! ```
//!
//! with the step convention `Θ(0) = 0`, so `|B| = 1` sits in the dead zone.
//! The derivative with respect to `B` is `Θ(|B| − 1) / A` almost everywhere.
//!
//! The checked functions validate their arguments; the solvers use the
//! unchecked [`shrink`] and [`shrink_slope`] in their inner loops.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum KernelError {
    #[error("curvature must be positive and finite, got {0}")]
    InvalidCurvature(f64),
    #[error("field must be finite, got {0}")]
    NonFiniteField(f64),
}

fn check(b: f64, a: f64) -> Result<(), KernelError> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(KernelError::InvalidCurvature(a));
    }
    if !b.is_finite() {
        return Err(KernelError::NonFiniteField(b));
    }
    Ok(())
}

/// `f(b; a)`: zero when `|b| ≤ 1`, `(b − sign(b)) / a` otherwise.
pub fn soft_threshold(b: f64, a: f64) -> Result<f64, KernelError> {
    check(b, a)?;
    Ok(shrink(b, a))
}

/// `∂f(b; a)/∂b`: `1/a` outside the dead zone, zero inside it (including `|b| = 1`).
pub fn soft_threshold_deriv(b: f64, a: f64) -> Result<f64, KernelError> {
    check(b, a)?;
    Ok(shrink_slope(b, a))
}

/// Unchecked [`soft_threshold`].
#[inline]
pub fn shrink(b: f64, a: f64) -> f64 {
    if b > 1.0 {
        (b - 1.0) / a
    } else if b < -1.0 {
        (b + 1.0) / a
    } else {
        0.0
    }
}

/// Unchecked [`soft_threshold_deriv`].
#[inline]
pub fn shrink_slope(b: f64, a: f64) -> f64 {
    if b.abs() > 1.0 {
        1.0 / a
    } else {
        0.0
    }
}

/// Curvature `A` and field `B` of a single-site objective `½ A x² − B x + |x|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdPair {
    a: f64,
    b: f64,
}

impl ThresholdPair {
    pub fn new(a: f64, b: f64) -> Result<Self, KernelError> {
        check(b, a)?;
        Ok(Self { a, b })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// The minimizer of the single-site objective.
    pub fn argmin(&self) -> f64 {
        shrink(self.b, self.a)
    }

    pub fn slope(&self) -> f64 {
        shrink_slope(self.b, self.a)
    }

    pub fn is_active(&self) -> bool {
        self.b.abs() > 1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dead_zone_and_direct_values() {
        assert_eq!(soft_threshold(0.5, 1.0).unwrap(), 0.0);
        assert_eq!(soft_threshold(2.0, 1.0).unwrap(), 1.0);
        assert_eq!(soft_threshold(-3.0, 2.0).unwrap(), -1.0);
        assert_eq!(soft_threshold(1.0, 1.0).unwrap(), 0.0);
        assert_eq!(soft_threshold(-1.0, 3.0).unwrap(), 0.0);
    }

    #[test]
    fn derivative_step() {
        assert_eq!(soft_threshold_deriv(2.0, 4.0).unwrap(), 0.25);
        assert_eq!(soft_threshold_deriv(0.99, 1.0).unwrap(), 0.0);
        assert_eq!(soft_threshold_deriv(1.01, 1.0).unwrap(), 1.0);
        assert_eq!(soft_threshold_deriv(1.0, 1.0).unwrap(), 0.0);
        assert_eq!(soft_threshold_deriv(-1.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert_eq!(soft_threshold(1.0, 0.0), Err(KernelError::InvalidCurvature(0.0)));
        assert_eq!(soft_threshold(1.0, -2.0), Err(KernelError::InvalidCurvature(-2.0)));
        assert!(soft_threshold(1.0, f64::INFINITY).is_err());
        assert!(soft_threshold(f64::NAN, 1.0).is_err());
        assert!(soft_threshold_deriv(f64::INFINITY, 1.0).is_err());
        assert!(ThresholdPair::new(0.0, 1.0).is_err());
    }

    #[test]
    fn pair_matches_functions() {
        let p = ThresholdPair::new(2.0, -3.5).unwrap();
        assert_eq!(p.argmin(), -1.25);
        assert_eq!(p.slope(), 0.5);
        assert!(p.is_active());
        assert!(!ThresholdPair::new(2.0, 0.3).unwrap().is_active());
    }

    #[test]
    fn oddness_on_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let b: f64 = rng.random_range(-20.0..20.0);
            let a: f64 = rng.random_range(1e-3..50.0);
            assert_eq!(shrink(b, a), -shrink(-b, a));
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let h = 1e-6;
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut checked = 0;
        while checked < 10_000 {
            let b: f64 = rng.random_range(-5.0..5.0);
            let a: f64 = rng.random_range(0.1..10.0);
            if (b.abs() - 1.0).abs() <= 1e-3 {
                continue;
            }
            let fd = (shrink(b + h, a) - shrink(b - h, a)) / (2.0 * h);
            assert!((fd - shrink_slope(b, a)).abs() < 1e-6, "b={b} a={a} fd={fd}");
            checked += 1;
        }
    }

    proptest! {
        #[test]
        fn dead_zone_iff_small_field(b in -10.0f64..10.0, a in 1e-3f64..100.0) {
            prop_assert_eq!(shrink(b, a) == 0.0, b.abs() <= 1.0);
        }

        #[test]
        fn shrinkage_magnitude(b in -10.0f64..10.0, a in 1e-3f64..100.0) {
            let expect = (b.abs() - 1.0).max(0.0) / a;
            prop_assert!((shrink(b, a).abs() - expect).abs() <= 1e-15 * (1.0 + expect));
        }

        #[test]
        fn scaled_map_is_one_lipschitz(b1 in -10.0f64..10.0, b2 in -10.0f64..10.0, a in 1e-3f64..100.0) {
            let lhs = (a * shrink(b1, a) - a * shrink(b2, a)).abs();
            prop_assert!(lhs <= (b1 - b2).abs() * (1.0 + 1e-12) + 1e-12);
        }
    }
}
