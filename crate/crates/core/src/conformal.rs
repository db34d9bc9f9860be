//! Split conformal regression on top of quantile interval models.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{check_dim, invalid, Result};
use crate::interval::{fit_interval, IntervalSpec, PredictionInterval};
use crate::metrics::ExperimentReport;
use crate::models::FitOptions;
use crate::par::{self, Execution};
use crate::stats::seeded_stream;

pub const DEFAULT_CALIB_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub scores: Vec<f64>,
    /// The conformal quantile; `+inf` when the rank exceeds the number of scores.
    pub offset: f64,
    /// One-based order-statistic rank `ceil((1 - alpha)(n + 1))`.
    pub level_index: usize,
    pub alpha: f64,
    pub degenerate: bool,
}

/// Seeded random partition into `(I1, I2)` with `|I2| = round(fraction m)`
/// clamped to `[1, m - 1]`. Each part keeps the original row order.
pub fn split_train_calibrate(data: &Dataset, calib_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(calib_fraction > 0.0 && calib_fraction < 1.0) {
        return invalid(format!("calibration fraction must lie in (0, 1), got {calib_fraction}"));
    }
    let m = data.len();
    if m < 2 {
        return invalid("need at least two rows to split");
    }
    let n2 = ((calib_fraction * m as f64).round() as usize).clamp(1, m - 1);
    let mut idx: Vec<usize> = (0..m).collect();
    idx.shuffle(&mut seeded_stream(seed, 2));
    let (i2, i1) = idx.split_at(n2);
    let mut i1 = i1.to_vec();
    let mut i2 = i2.to_vec();
    i1.sort_unstable();
    i2.sort_unstable();
    Ok((data.select_rows(&i1), data.select_rows(&i2)))
}

/// `E_i = max(lower(x_i) - y_i, y_i - upper(x_i))` on the calibration rows.
pub fn nonconformity_scores(pi: &PredictionInterval, calib: &Dataset) -> Result<Vec<f64>> {
    if pi.conformal_offset != 0.0 {
        return invalid("scores must be computed on an interval without a conformal offset");
    }
    check_dim(pi.lower.n_features(), calib.n_features())?;
    let lo = pi.lower.predict_many_with(Execution::Sequential, calib.inputs.view())?;
    let hi = pi.upper.predict_many_with(Execution::Sequential, calib.inputs.view())?;
    Ok(calib
        .targets
        .iter()
        .zip(lo.iter().zip(&hi))
        .map(|(&y, (&l, &h))| (l - y).max(y - h))
        .collect())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return invalid(format!("alpha must lie in (0, 1), got {alpha}"));
    }
    Ok(())
}

/// Returns `(offset, level_index)`; the offset is `+inf` when the rank
/// exceeds the number of scores.
pub fn conformal_quantile(scores: &[f64], alpha: f64) -> Result<(f64, usize)> {
    check_alpha(alpha)?;
    if scores.is_empty() {
        return invalid("no calibration scores");
    }
    let n = scores.len();
    // The small slack keeps exact products such as 0.9 * 100 from rounding up.
    let k = (((1.0 - alpha) * (n as f64 + 1.0)) - 1e-9).ceil().max(1.0) as usize;
    if k > n {
        return Ok((f64::INFINITY, k));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok((sorted[k - 1], k))
}

pub fn calibrate(pi: &PredictionInterval, calib: &Dataset, alpha: f64) -> Result<CalibrationResult> {
    let scores = nonconformity_scores(pi, calib)?;
    let (offset, level_index) = conformal_quantile(&scores, alpha)?;
    Ok(CalibrationResult {
        degenerate: offset.is_infinite(),
        scores,
        offset,
        level_index,
        alpha,
    })
}

/// `pi` with its bounds widened by the conformal quantile.
pub fn conformalize(pi: &PredictionInterval, calib: &Dataset, alpha: f64) -> Result<(PredictionInterval, CalibrationResult)> {
    let cal = calibrate(pi, calib, alpha)?;
    let mut out = pi.clone();
    out.conformal_offset = cal.offset;
    Ok((out, cal))
}

/// One split/fit/calibrate/test run.
#[derive(Debug, Clone, PartialEq)]
pub struct ConformalRun {
    pub interval: PredictionInterval,
    pub calibration: CalibrationResult,
    pub raw: ExperimentReport,
    pub test: ExperimentReport,
}

pub fn conformal_pipeline(
    train: &Dataset,
    test: &Dataset,
    spec: &IntervalSpec,
    alpha: f64,
    calib_fraction: f64,
    seed: u64,
    opts: &FitOptions,
) -> Result<ConformalRun> {
    check_alpha(alpha)?;
    let (i1, i2) = split_train_calibrate(train, calib_fraction, seed)?;
    let fit = fit_interval(&i1, spec, opts)?;
    let (interval, calibration) = conformalize(&fit.interval, &i2, alpha)?;
    let mut raw = fit.interval.evaluate_with(opts.exec, test)?;
    raw.train_seconds = fit.train_seconds;
    let mut rep = interval.evaluate_with(opts.exec, test)?;
    rep.train_seconds = fit.train_seconds;
    Ok(ConformalRun {
        interval,
        calibration,
        raw,
        test: rep,
    })
}

/// Runs `run(t)` for each trial index `t`, in parallel when enabled.
/// Results come back in trial order.
pub fn monte_carlo<F>(trials: usize, exec: Execution, run: F) -> Vec<Result<ConformalRun>>
where
    F: Fn(u64) -> Result<ConformalRun> + Sync + Send,
{
    par::map_indexed(exec, trials, |t| run(t as u64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelSpec;
    use crate::models::KernelModel;
    use crate::interval::Method;
    use ndarray::{array, Array2};

    fn flat_interval(lo: f64, hi: f64) -> PredictionInterval {
        PredictionInterval {
            lower: KernelModel::constant(1, lo, KernelSpec::linear()),
            upper: KernelModel::constant(1, hi, KernelSpec::linear()),
            conformal_offset: 0.0,
            coverage_target: 0.9,
            q_bar: 0.05,
            method: Method::Svqr,
        }
    }

    #[test]
    fn split_sizes_and_determinism() {
        let d = Dataset::new(Array2::from_shape_fn((10, 1), |(i, _)| i as f64), ndarray::Array1::zeros(10)).unwrap();
        let (a, b) = split_train_calibrate(&d, 0.5, 9).unwrap();
        assert_eq!((a.len(), b.len()), (5, 5));
        let mut all: Vec<f64> = a.inputs.iter().chain(b.inputs.iter()).copied().collect();
        all.sort_by(f64::total_cmp);
        assert_eq!(all, (0..10).map(|i| i as f64).collect::<Vec<_>>());
        assert_eq!(split_train_calibrate(&d, 0.5, 9).unwrap(), (a, b));
        let (_, c) = split_train_calibrate(&d, 0.99, 9).unwrap();
        assert_eq!(c.len(), 9);
        assert!(split_train_calibrate(&d, 1.0, 9).is_err());
    }

    #[test]
    fn score_examples() {
        let pi = flat_interval(0.0, 4.0);
        let calib = Dataset::new(array![[0.0], [0.0], [0.0]], array![0.0, 2.0, 6.0]).unwrap();
        assert_eq!(nonconformity_scores(&pi, &calib).unwrap(), vec![0.0, -2.0, 2.0]);
    }

    #[test]
    fn quantile_examples() {
        let s: Vec<f64> = (1..=99).map(|v| v as f64).collect();
        assert_eq!(conformal_quantile(&s, 0.1).unwrap(), (90.0, 90));
        assert_eq!(conformal_quantile(&[5.0], 0.5).unwrap(), (5.0, 1));
        let (off, k) = conformal_quantile(&[1.0, 2.0, 3.0], 0.05).unwrap();
        assert_eq!(k, 4);
        assert!(off.is_infinite());
        assert!(conformal_quantile(&[], 0.1).is_err());
    }

    #[test]
    fn offset_is_additive() {
        let pi = flat_interval(0.0, 1.0);
        let calib = Dataset::new(array![[0.0], [0.0]], array![2.0, 2.0]).unwrap();
        let (c, cal) = conformalize(&pi, &calib, 0.4).unwrap();
        assert_eq!(cal.offset, 1.0);
        let (lo, hi) = c.bounds(array![[3.0]].view()).unwrap();
        assert_eq!((lo[0], hi[0]), (-1.0, 2.0));
    }

    proptest::proptest! {
        #[test]
        fn offset_monotone_in_alpha(scores in proptest::collection::vec(-5.0f64..5.0, 1..40), a in 0.01f64..0.98, b in 0.01f64..0.98) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let (o_small, _) = conformal_quantile(&scores, lo).unwrap();
            let (o_big, _) = conformal_quantile(&scores, hi).unwrap();
            proptest::prop_assert!(o_small >= o_big);
        }
    }
}
