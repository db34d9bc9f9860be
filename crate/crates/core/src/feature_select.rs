//! Feature selection from linear-kernel sparse quantile fits.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::data::{column_moments, Dataset};
use crate::error::{invalid, Error, Result};
use crate::interval::{fit_interval, quantile_levels, IntervalSpec, Method, PredictionInterval};
use crate::kernel::KernelSpec;
use crate::metrics::ExperimentReport;
use crate::models::{fit_ssvqr, FitOptions};
use crate::solvers::{solve_lp, LpProblem, SolverStatus};
use crate::stats::empirical_quantile;

/// Relative threshold used when none is given: `1e-4 * max |w|`.
pub const DEFAULT_FEATURE_REL_EPS: f64 = 1e-4;

/// How the weight vector of each bound is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightRoute {
    /// L1 penalty on the weight vector itself:
    /// `min 1/2 ||w||_1 + C sum pinball(y - Xw - b)`.
    #[default]
    Primal,
    /// L1 penalty on the kernel expansion with `K = X X'`, then `w = X'u`.
    Expansion,
}

impl fmt::Display for WeightRoute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WeightRoute::Primal => "primal",
            WeightRoute::Expansion => "expansion",
        })
    }
}

impl FromStr for WeightRoute {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "primal" => Ok(WeightRoute::Primal),
            "expansion" => Ok(WeightRoute::Expansion),
            _ => invalid(format!("unknown weight route {s:?} (expected primal or expansion)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSelection {
    pub kept: Vec<usize>,
    pub dropped: Vec<usize>,
    /// Weights on standardized features; these are the thresholded values.
    pub w_lower: Vec<f64>,
    pub w_upper: Vec<f64>,
    /// The same weights expressed on the original feature scales.
    pub w_lower_raw: Vec<f64>,
    pub w_upper_raw: Vec<f64>,
    pub eps: f64,
    pub route: WeightRoute,
    pub column_names: Option<Vec<String>>,
}

impl FeatureSelection {
    pub fn pct_reduced(&self) -> f64 {
        let n = self.kept.len() + self.dropped.len();
        100.0 * self.dropped.len() as f64 / n as f64
    }

    /// Re-threshold the stored weights.
    pub fn with_eps(&self, eps: f64) -> FeatureSelection {
        let (kept, dropped) = partition(&self.w_lower, &self.w_upper, eps);
        FeatureSelection {
            kept,
            dropped,
            eps,
            ..self.clone()
        }
    }
}

fn partition(w_lo: &[f64], w_hi: &[f64], eps: f64) -> (Vec<usize>, Vec<usize>) {
    (0..w_lo.len()).partition(|&j| !(w_lo[j].abs() <= eps && w_hi[j].abs() <= eps))
}

/// Column standardization fitted on one dataset and applied to others.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Array1<f64>,
    pub sd: Array1<f64>,
}

impl Standardizer {
    pub fn fit(data: &Dataset) -> Self {
        let (mean, sd) = column_moments(&data.inputs);
        Standardizer { mean, sd }
    }

    pub fn apply(&self, data: &Dataset) -> Dataset {
        let mut out = data.clone();
        for (mut row, _) in out.inputs.axis_iter_mut(Axis(0)).zip(0..) {
            row -= &self.mean;
            row /= &self.sd;
        }
        out
    }
}

/// `min 1/2 sum(w+ + w-) + C sum(q xi + (1-q) xi*)` over
/// `(w+, w-, xi, xi*, b)` with the pinball residual rows.
fn primal_lp(x: &Array2<f64>, y: &[f64], q: f64, c: f64) -> LpProblem {
    let (m, n) = x.dim();
    let nv = 2 * n + 2 * m + 1;
    let mut obj = vec![0.0; nv];
    obj[..2 * n].iter_mut().for_each(|v| *v = 0.5);
    obj[2 * n..2 * n + m].iter_mut().for_each(|v| *v = c * q);
    obj[2 * n + m..2 * n + 2 * m].iter_mut().for_each(|v| *v = c * (1.0 - q));
    let mut a = Array2::zeros((2 * m, nv));
    let mut rhs = vec![0.0; 2 * m];
    for i in 0..m {
        for j in 0..n {
            let v = x[[i, j]];
            a[[i, j]] = -v;
            a[[i, n + j]] = v;
            a[[m + i, j]] = v;
            a[[m + i, n + j]] = -v;
        }
        a[[i, nv - 1]] = -1.0;
        a[[i, 2 * n + i]] = -1.0;
        rhs[i] = -y[i];
        a[[m + i, nv - 1]] = 1.0;
        a[[m + i, 2 * n + m + i]] = -1.0;
        rhs[m + i] = y[i];
    }
    let mut bounds = vec![(0.0, f64::INFINITY); nv];
    bounds[nv - 1] = (f64::NEG_INFINITY, f64::INFINITY);
    LpProblem::new(obj).with_ub(a, rhs).with_bounds(bounds)
}

fn weights(data: &Dataset, q: f64, c: f64, route: WeightRoute, opts: &FitOptions) -> Result<Vec<f64>> {
    let n = data.n_features();
    match route {
        WeightRoute::Expansion => {
            let fit = fit_ssvqr(data, q, c, &KernelSpec::linear(), opts)?;
            let u = Array1::from(fit.model.coefficients);
            Ok(data.inputs.t().dot(&u).to_vec())
        }
        WeightRoute::Primal => {
            let y = data.targets.as_slice().expect("contiguous");
            let lp = primal_lp(&data.inputs, y, q, c);
            let max_iter = opts.max_iter.unwrap_or(50 * lp.num_vars());
            let sol = solve_lp(&lp, opts.lp_tol, max_iter)?;
            if sol.status != SolverStatus::Optimal {
                return Err(Error::Solver {
                    status: sol.status,
                    detail: format!("primal L1 quantile LP at q = {q}, certificate {:?}", sol.certificate),
                });
            }
            Ok((0..n).map(|j| sol.variables[j] - sol.variables[n + j]).collect())
        }
    }
}

/// Fits both bound levels on standardized features and drops every feature
/// whose weight is at most `eps` in both. `eps = None` uses the relative
/// default.
pub fn select_features(
    data: &Dataset,
    coverage_target: f64,
    q_bar: f64,
    eps: Option<f64>,
    c: f64,
    route: WeightRoute,
    opts: &FitOptions,
) -> Result<FeatureSelection> {
    data.validate()?;
    if let Some(e) = eps {
        if !(e >= 0.0) {
            return invalid(format!("eps must be nonnegative, got {e}"));
        }
    }
    let (q_lo, q_hi) = quantile_levels(coverage_target, q_bar)?;
    let st = Standardizer::fit(data);
    let z = st.apply(data);
    let w_lower = weights(&z, q_lo, c, route, opts)?;
    let w_upper = weights(&z, q_hi, c, route, opts)?;
    let max = w_lower.iter().chain(&w_upper).fold(0.0f64, |m, w| m.max(w.abs()));
    let eps = eps.unwrap_or(DEFAULT_FEATURE_REL_EPS * max);
    let (kept, dropped) = partition(&w_lower, &w_upper, eps);
    let raw = |w: &[f64]| w.iter().zip(st.sd.iter()).map(|(w, s)| w / s).collect::<Vec<_>>();
    Ok(FeatureSelection {
        kept,
        dropped,
        w_lower_raw: raw(&w_lower),
        w_upper_raw: raw(&w_upper),
        w_lower,
        w_upper,
        eps,
        route,
        column_names: data.column_names.clone(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionComparison {
    pub before: ExperimentReport,
    pub after: ExperimentReport,
    pub pct_reduced: f64,
    /// The refit on the kept features; `None` when nothing was kept.
    pub interval: Option<PredictionInterval>,
}

/// Linear SSVQR interval on all features versus the kept ones, both on
/// standardized inputs, evaluated on `test`. With no features kept the
/// refit is the constant interval between the training target quantiles,
/// which is what the linear LP reduces to.
pub fn refit_on_selection(
    train: &Dataset,
    test: &Dataset,
    sel: &FeatureSelection,
    coverage_target: f64,
    q_bar: f64,
    c: f64,
    opts: &FitOptions,
) -> Result<SelectionComparison> {
    let spec = IntervalSpec::new(Method::Ssvqr, coverage_target, q_bar, c, KernelSpec::linear());
    let run = |tr: &Dataset, te: &Dataset| -> Result<(PredictionInterval, ExperimentReport)> {
        let st = Standardizer::fit(tr);
        let (tr, te) = (st.apply(tr), st.apply(te));
        let start = Instant::now();
        let fit = fit_interval(&tr, &spec, opts)?;
        let seconds = start.elapsed().as_secs_f64();
        let mut rep = fit.interval.evaluate_with(opts.exec, &te)?;
        rep.train_seconds = seconds;
        Ok((fit.interval, rep))
    };
    let (_, before) = run(train, test)?;
    let (interval, after) = if sel.kept.is_empty() {
        let (q_lo, q_hi) = quantile_levels(coverage_target, q_bar)?;
        let start = Instant::now();
        let ytr = train.targets.to_vec();
        let (lo, hi) = (empirical_quantile(&ytr, q_lo)?, empirical_quantile(&ytr, q_hi)?);
        let seconds = start.elapsed().as_secs_f64();
        let yte = test.targets.to_vec();
        let mut rep = ExperimentReport::evaluate(&vec![lo; yte.len()], &vec![hi; yte.len()], &yte, coverage_target)?;
        rep.train_seconds = seconds;
        (None, rep)
    } else {
        let (pi, rep) = run(&train.select_columns(&sel.kept)?, &test.select_columns(&sel.kept)?)?;
        (Some(pi), rep)
    };
    Ok(SelectionComparison {
        before,
        after,
        pct_reduced: sel.pct_reduced(),
        interval,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::seeded_stream;
    use rand::Rng;

    fn synthetic(m: usize, seed: u64) -> Dataset {
        let mut rng = seeded_stream(seed, 0);
        let x = Array2::from_shape_fn((m, 5), |_| rng.random_range(-1.0..1.0));
        let y = Array1::from_shape_fn(m, |i| {
            2.0 * x[[i, 0]] - x[[i, 1]] + 1.5 * x[[i, 3]] + 0.5 * x[[i, 4]] + 0.1 * rng.random_range(-1.0..1.0)
        });
        Dataset::new(x, y).unwrap()
    }

    #[test]
    fn huge_eps_drops_everything() {
        let d = synthetic(60, 0);
        let s = select_features(&d, 0.9, 0.05, Some(f64::INFINITY), 1.0, WeightRoute::Primal, &FitOptions::default()).unwrap();
        assert!(s.kept.is_empty());
        assert_eq!(s.dropped, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn eps_monotonicity_and_partition() {
        let d = synthetic(60, 1);
        let s = select_features(&d, 0.9, 0.05, None, 1.0, WeightRoute::Primal, &FitOptions::default()).unwrap();
        let mut prev: Vec<usize> = Vec::new();
        for e in [0.0, 1e-3, 0.1, 0.5, 1.0, 10.0] {
            let t = s.with_eps(e);
            assert!(prev.iter().all(|j| t.dropped.contains(j)));
            let mut all = [t.kept.clone(), t.dropped.clone()].concat();
            all.sort_unstable();
            assert_eq!(all, vec![0, 1, 2, 3, 4]);
            prev = t.dropped;
        }
    }

    #[test]
    fn weights_scale_with_targets() {
        let d = synthetic(50, 2);
        let mut d3 = d.clone();
        d3.targets *= 3.0;
        let o = FitOptions::default();
        let a = select_features(&d, 0.9, 0.05, Some(1e-3), 1.0, WeightRoute::Primal, &o).unwrap();
        let b = select_features(&d3, 0.9, 0.05, Some(3e-3), 1.0, WeightRoute::Primal, &o).unwrap();
        assert_eq!(a.dropped, b.dropped);
        for (x, y) in a.w_lower.iter().zip(&b.w_lower) {
            assert!((3.0 * x - y).abs() <= 1e-6 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn identity_selection_matches_full_fit() {
        let d = synthetic(40, 3);
        let t = synthetic(30, 4);
        let s = select_features(&d, 0.9, 0.05, Some(0.0), 1.0, WeightRoute::Expansion, &FitOptions::default()).unwrap();
        let all = FeatureSelection {
            kept: vec![0, 1, 2, 3, 4],
            dropped: vec![],
            ..s
        };
        let cmp = refit_on_selection(&d, &t, &all, 0.9, 0.05, 1.0, &FitOptions::default()).unwrap();
        assert_eq!(cmp.before.picp, cmp.after.picp);
        assert_eq!(cmp.before.mpiw, cmp.after.mpiw);
        assert_eq!(cmp.pct_reduced, 0.0);
    }

    #[test]
    fn empty_selection_refits_a_constant_interval() {
        let d = synthetic(60, 5);
        let t = synthetic(40, 6);
        let s = select_features(&d, 0.9, 0.05, Some(f64::INFINITY), 1.0, WeightRoute::Primal, &FitOptions::default()).unwrap();
        assert!(s.kept.is_empty());
        let cmp = refit_on_selection(&d, &t, &s, 0.9, 0.05, 1.0, &FitOptions::default()).unwrap();
        assert!(cmp.interval.is_none());
        assert_eq!(cmp.pct_reduced, 100.0);
        let y = d.targets.to_vec();
        let pinball = |q: f64, b: f64| y.iter().map(|&v| if v >= b { q * (v - b) } else { (1.0 - q) * (b - v) }).sum::<f64>();
        let (q_lo, q_hi) = quantile_levels(0.9, 0.05).unwrap();
        for q in [q_lo, q_hi] {
            let b = empirical_quantile(&y, q).unwrap();
            assert!(y.iter().all(|&v| pinball(q, b) <= pinball(q, v) + 1e-12));
        }
        let width = empirical_quantile(&y, q_hi).unwrap() - empirical_quantile(&y, q_lo).unwrap();
        assert!((cmp.after.mpiw - width).abs() < 1e-12);
    }
}
