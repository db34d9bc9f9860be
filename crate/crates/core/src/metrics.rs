//! Interval and quantile evaluation metrics.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Result};

/// Fraction of targets inside `[lower, upper]`, endpoints included.
pub fn picp(lower: &[f64], upper: &[f64], y: &[f64]) -> Result<f64> {
    check_dim(lower.len(), upper.len())?;
    check_dim(lower.len(), y.len())?;
    if y.is_empty() {
        return invalid("PICP of an empty sample");
    }
    let inside = (0..y.len()).filter(|&i| lower[i] <= y[i] && y[i] <= upper[i]).count();
    Ok(inside as f64 / y.len() as f64)
}

pub fn mpiw(lower: &[f64], upper: &[f64]) -> Result<f64> {
    check_dim(lower.len(), upper.len())?;
    if lower.is_empty() {
        return invalid("MPIW of an empty sample");
    }
    Ok(lower.iter().zip(upper).map(|(l, u)| u - l).sum::<f64>() / lower.len() as f64)
}

/// Coverage shortfall `max(0, target - picp)`.
pub fn pice(picp_value: f64, coverage_target: f64) -> f64 {
    (coverage_target - picp_value).max(0.0)
}

/// Fraction of targets at or below the prediction.
pub fn coverage_probability(predictions: &[f64], y: &[f64]) -> Result<f64> {
    check_dim(predictions.len(), y.len())?;
    if y.is_empty() {
        return invalid("coverage of an empty sample");
    }
    Ok(predictions.iter().zip(y).filter(|(p, y)| y <= p).count() as f64 / y.len() as f64)
}

pub fn quantile_rmse(estimate: &[f64], truth: &[f64]) -> Result<f64> {
    check_dim(estimate.len(), truth.len())?;
    if truth.is_empty() {
        return invalid("RMSE of an empty sample");
    }
    let ss: f64 = estimate.iter().zip(truth).map(|(e, t)| (e - t).powi(2)).sum();
    Ok((ss / truth.len() as f64).sqrt())
}

/// Per-point monotone repair `[min(l, u), max(l, u)]`; returns the repaired
/// bounds and the fraction of points that were crossed.
pub fn repair_crossing(lower: &[f64], upper: &[f64]) -> (Vec<f64>, Vec<f64>, f64) {
    let mut lo = Vec::with_capacity(lower.len());
    let mut hi = Vec::with_capacity(lower.len());
    let mut crossed = 0usize;
    for (&l, &u) in lower.iter().zip(upper) {
        if l > u {
            crossed += 1;
        }
        lo.push(l.min(u));
        hi.push(l.max(u));
    }
    let frac = if lower.is_empty() { 0.0 } else { crossed as f64 / lower.len() as f64 };
    (lo, hi, frac)
}

/// Metric bundle for one interval configuration.
/// Field names of [`ExperimentReport::fields`], in report order.
pub const REPORT_FIELDS: [&str; 12] = [
    "coverage_target",
    "picp",
    "mpiw",
    "pice",
    "cp_lower",
    "cp_upper",
    "sparsity_lower_pct",
    "sparsity_upper_pct",
    "rmse_lower",
    "rmse_upper",
    "train_seconds",
    "crossing_fraction",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub coverage_target: f64,
    pub picp: f64,
    pub mpiw: f64,
    pub pice: f64,
    pub cp_lower: f64,
    pub cp_upper: f64,
    pub sparsity_lower_pct: f64,
    pub sparsity_upper_pct: f64,
    pub rmse_lower: Option<f64>,
    pub rmse_upper: Option<f64>,
    pub train_seconds: f64,
    pub crossing_fraction: f64,
}

impl ExperimentReport {
    /// Evaluates raw (unrepaired) bounds against `y`. Bounds are repaired
    /// before PICP/MPIW; CP uses each raw bound.
    pub fn evaluate(lower: &[f64], upper: &[f64], y: &[f64], coverage_target: f64) -> Result<Self> {
        let (lo, hi, crossing_fraction) = repair_crossing(lower, upper);
        let p = picp(&lo, &hi, y)?;
        Ok(ExperimentReport {
            coverage_target,
            picp: p,
            mpiw: mpiw(&lo, &hi)?,
            pice: pice(p, coverage_target),
            cp_lower: coverage_probability(lower, y)?,
            cp_upper: coverage_probability(upper, y)?,
            sparsity_lower_pct: 0.0,
            sparsity_upper_pct: 0.0,
            rmse_lower: None,
            rmse_upper: None,
            train_seconds: 0.0,
            crossing_fraction,
        })
    }

    /// `(name, value)` pairs in the order of [`REPORT_FIELDS`]; absent
    /// values are `NA`.
    pub fn fields(&self) -> Vec<(&'static str, String)> {
        let f = crate::data::format_float;
        let opt = |v: Option<f64>| v.map(f).unwrap_or_else(|| "NA".to_owned());
        let values = [
            f(self.coverage_target),
            f(self.picp),
            f(self.mpiw),
            f(self.pice),
            f(self.cp_lower),
            f(self.cp_upper),
            f(self.sparsity_lower_pct),
            f(self.sparsity_upper_pct),
            opt(self.rmse_lower),
            opt(self.rmse_upper),
            f(self.train_seconds),
            f(self.crossing_fraction),
        ];
        REPORT_FIELDS.into_iter().zip(values).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn spec_examples() {
        assert_eq!(picp(&[0.0, 0.0], &[1.0, 1.0], &[0.5, 2.0]).unwrap(), 0.5);
        assert_eq!(picp(&[0.0], &[1.0], &[1.0]).unwrap(), 1.0);
        assert_eq!(mpiw(&[0.0, 1.0], &[2.0, 5.0]).unwrap(), 3.0);
        assert_eq!(pice(0.96, 0.95), 0.0);
        assert!((pice(0.90, 0.95) - 0.05).abs() < 1e-15);
        assert_eq!(coverage_probability(&[1.0, 1.0], &[0.0, 2.0]).unwrap(), 0.5);
        assert!((quantile_rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap() - 12.5f64.sqrt()).abs() < 1e-15);
        assert!(picp(&[0.0], &[1.0, 2.0], &[0.0]).is_err());
    }

    #[test]
    fn crossing_is_repaired_and_counted() {
        let (lo, hi, frac) = repair_crossing(&[0.0, 3.0], &[1.0, 2.0]);
        assert_eq!(lo, vec![0.0, 2.0]);
        assert_eq!(hi, vec![1.0, 3.0]);
        assert_eq!(frac, 0.5);
    }

    proptest! {
        #[test]
        fn rmse_detects_translation(v in prop::collection::vec(-1e3f64..1e3, 1..50), d in -10.0f64..10.0) {
            let shifted: Vec<f64> = v.iter().map(|x| x + d).collect();
            prop_assert!((quantile_rmse(&shifted, &v).unwrap() - d.abs()).abs() < 1e-9);
        }

        #[test]
        fn picp_complements_outside(
            pts in prop::collection::vec((-5.0f64..5.0, 0.0f64..3.0, -6.0f64..6.0), 1..60)
        ) {
            let lo: Vec<f64> = pts.iter().map(|p| p.0).collect();
            let hi: Vec<f64> = pts.iter().map(|p| p.0 + p.1).collect();
            let y: Vec<f64> = pts.iter().map(|p| p.2).collect();
            let outside = (0..y.len()).filter(|&i| y[i] < lo[i] || y[i] > hi[i]).count() as f64 / y.len() as f64;
            prop_assert_eq!(picp(&lo, &hi, &y).unwrap() + outside, 1.0);
        }
    }
}
