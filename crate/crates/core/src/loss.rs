//! Pinball, Tube and coverage-width losses.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Default penalty steepness for [`cwc`].
pub const DEFAULT_CWC_ETA: f64 = 50.0;

/// Pinball (check) loss of residual `u` at quantile level `q`.
pub fn pinball(q: f64, u: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return invalid(format!("quantile level must lie in (0, 1), got {q}"));
    }
    Ok(pinball_unchecked(q, u))
}

#[inline]
pub(crate) fn pinball_unchecked(q: f64, u: f64) -> f64 {
    if u >= 0.0 {
        q * u
    } else {
        (q - 1.0) * u
    }
}

/// Parameters of the Tube loss and its kernel training problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TubeParams {
    /// Target coverage `1 - alpha`.
    pub coverage_target: f64,
    /// Tube movement parameter; 0.5 centres the tube.
    pub r: f64,
    /// Width penalty.
    pub delta: f64,
    /// Coefficient regularization.
    pub lambda: f64,
}

impl TubeParams {
    pub fn new(coverage_target: f64, r: f64, delta: f64, lambda: f64) -> Result<Self> {
        let p = TubeParams {
            coverage_target,
            r,
            delta,
            lambda,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.coverage_target > 0.0 && self.coverage_target < 1.0) {
            return invalid(format!("coverage target must lie in (0, 1), got {}", self.coverage_target));
        }
        if !(self.r > 0.0 && self.r < 1.0) {
            return invalid(format!("tube parameter r must lie in (0, 1), got {}", self.r));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return invalid(format!("delta must be nonnegative, got {}", self.delta));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return invalid(format!("lambda must be nonnegative, got {}", self.lambda));
        }
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        1.0 - self.coverage_target
    }
}

/// Which branch of the Tube loss a residual pair falls into.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum TubeBranch {
    /// Above the upper bound.
    Above,
    /// Inside, in the part of the tube assigned to the upper bound.
    InsideUpper,
    /// Inside, in the part of the tube assigned to the lower bound.
    InsideLower,
    /// Below the lower bound.
    Below,
}

/// Residuals are `u2 = y - upper` and `u1 = y - lower`, so `u2 <= u1`.
#[inline]
pub(crate) fn tube_branch(r: f64, u2: f64, u1: f64) -> TubeBranch {
    if u2 > 0.0 {
        TubeBranch::Above
    } else if u1 < 0.0 {
        TubeBranch::Below
    } else if r * u2 + (1.0 - r) * u1 >= 0.0 {
        TubeBranch::InsideUpper
    } else {
        TubeBranch::InsideLower
    }
}

#[inline]
pub(crate) fn tube_loss_unchecked(coverage: f64, r: f64, u2: f64, u1: f64) -> f64 {
    let alpha = 1.0 - coverage;
    match tube_branch(r, u2, u1) {
        TubeBranch::Above => coverage * u2,
        TubeBranch::InsideUpper => -alpha * u2,
        TubeBranch::InsideLower => alpha * u1,
        TubeBranch::Below => -coverage * u1,
    }
}

/// Tube loss of the residual pair `(u2, u1)`, where `u2` is the residual to
/// the upper bound and `u1` the residual to the lower bound.
pub fn tube_loss(params: &TubeParams, u2: f64, u1: f64) -> Result<f64> {
    params.validate()?;
    if u2 > u1 {
        return invalid(format!("malformed bound pair: u2 = {u2} exceeds u1 = {u1}"));
    }
    Ok(tube_loss_unchecked(params.coverage_target, params.r, u2, u1))
}

/// Coverage-width criterion `(MPIW / R) * (1 + gamma * exp(-eta (PICP - target)))`,
/// with `gamma = 1` only when coverage falls short of the target.
pub fn cwc(mpiw: f64, picp: f64, y_range: f64, eta: f64, coverage_target: f64) -> Result<f64> {
    if !(y_range > 0.0) {
        return invalid(format!("response range must be positive, got {y_range}"));
    }
    if !(eta > 0.0) {
        return invalid(format!("eta must be positive, got {eta}"));
    }
    let gamma = if picp >= coverage_target { 0.0 } else { 1.0 };
    Ok(mpiw / y_range * (1.0 + gamma * (-eta * (picp - coverage_target)).exp()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn tp() -> TubeParams {
        TubeParams::new(0.9, 0.5, 0.0, 0.0).unwrap()
    }

    #[test]
    fn pinball_examples() {
        assert_abs_diff_eq!(pinball(0.5, 2.0).unwrap(), 1.0);
        assert_abs_diff_eq!(pinball(0.95, -1.0).unwrap(), 0.05, epsilon = 1e-15);
        assert_abs_diff_eq!(pinball(0.1, 3.0).unwrap(), 0.3, epsilon = 1e-15);
        assert!(pinball(0.0, 1.0).is_err());
        assert!(pinball(1.0, 1.0).is_err());
    }

    #[test]
    fn tube_examples() {
        assert_abs_diff_eq!(tube_loss(&tp(), 2.0, 3.0).unwrap(), 1.8, epsilon = 1e-15);
        assert_abs_diff_eq!(tube_loss(&tp(), -1.0, 3.0).unwrap(), 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(tube_loss(&tp(), -3.0, -2.0).unwrap(), 1.8, epsilon = 1e-15);
        assert!(tube_loss(&tp(), 1.0, 0.0).is_err());
    }

    #[test]
    fn tube_boundary_at_zero_upper_residual() {
        // u2 = 0 with u1 >= 0 goes to the inside branches and evaluates to zero.
        assert_eq!(tube_branch(0.5, 0.0, 1.0), TubeBranch::InsideUpper);
        assert_eq!(tube_loss(&tp(), 0.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn cwc_examples() {
        assert_abs_diff_eq!(cwc(2.0, 0.96, 4.0, 50.0, 0.95).unwrap(), 0.5);
        assert_abs_diff_eq!(cwc(2.0, 0.95, 4.0, 50.0, 0.95).unwrap(), 0.5);
        let v = cwc(2.0, 0.90, 4.0, 50.0, 0.95).unwrap();
        assert_abs_diff_eq!(v, 0.5 * (1.0 + 2.5f64.exp()), epsilon = 1e-9);
        assert_abs_diff_eq!(v, 6.591_246_9, epsilon = 1e-6);
        assert!(cwc(2.0, 0.9, 0.0, 50.0, 0.95).is_err());
    }

    #[test]
    fn tube_params_validation() {
        assert!(TubeParams::new(1.0, 0.5, 0.0, 0.0).is_err());
        assert!(TubeParams::new(0.9, 0.0, 0.0, 0.0).is_err());
        assert!(TubeParams::new(0.9, 0.5, -1.0, 0.0).is_err());
        assert!(TubeParams::new(0.9, 0.5, 0.0, -1.0).is_err());
    }

    proptest! {
        #[test]
        fn pinball_convex_nonnegative(q in 0.001f64..0.999, a in -100.0f64..100.0, b in -100.0f64..100.0) {
            let mid = pinball(q, 0.5 * (a + b)).unwrap();
            let avg = 0.5 * (pinball(q, a).unwrap() + pinball(q, b).unwrap());
            prop_assert!(mid <= avg + 1e-12);
            prop_assert!(pinball(q, a).unwrap() >= 0.0);
            if a != 0.0 {
                prop_assert!(pinball(q, a).unwrap() > 0.0);
            }
        }

        #[test]
        fn tube_nonnegative(cov in 0.01f64..0.99, r in 0.01f64..0.99, u2 in -50.0f64..50.0, gap in 0.0f64..50.0) {
            let p = TubeParams::new(cov, r, 0.0, 0.0).unwrap();
            prop_assert!(tube_loss(&p, u2, u2 + gap).unwrap() >= 0.0);
        }

        #[test]
        fn tube_continuous_across_inside_boundary(cov in 0.01f64..0.99, half in 0.01f64..10.0, t in 1e-12f64..1e-10) {
            // With r = 0.5 the inside branches meet where u1 = -u2.
            let p = TubeParams::new(cov, 0.5, 0.0, 0.0).unwrap();
            let above = tube_loss(&p, -half + t, half + t).unwrap();
            let below = tube_loss(&p, -half - t, half - t).unwrap();
            prop_assert!((above - below).abs() <= 1e-9);
        }

        #[test]
        fn cwc_decreases_with_coverage(p1 in 0.0f64..0.94, dp in 0.001f64..0.01, mpiw in 0.1f64..10.0) {
            let p2 = (p1 + dp).min(0.9499);
            prop_assume!(p2 > p1);
            let a = cwc(mpiw, p1, 3.0, 50.0, 0.95).unwrap();
            let b = cwc(mpiw, p2, 3.0, 50.0, 0.95).unwrap();
            prop_assert!(b < a);
        }
    }
}
