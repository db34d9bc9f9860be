//! Support vector quantile regression through its dual QP.

use std::time::Instant;

use ndarray::Array2;

use super::{check_fit_inputs, check_level, gram_times, pinball_offset, training_gram, FitOptions, FitReport, KernelModel};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::solvers::{solve_qp_box_eq, QpBoxEqProblem, SolverStatus};

/// Dual of the SVQR primal in the difference variables `u = alpha - beta`:
/// `min 1/2 u'Ku - y'u` s.t. `sum u = 0`, `-C(1-q) <= u <= Cq`.
///
/// At the optimum `alpha = max(u, 0)` and `beta = max(-u, 0)`, since a pair
/// with both multipliers positive can be shrunk without changing `u`.
pub fn svqr_dual(gram: Array2<f64>, y: &[f64], q: f64, c: f64) -> QpBoxEqProblem {
    let m = y.len();
    QpBoxEqProblem {
        gram,
        linear: y.iter().map(|v| -v).collect(),
        eq_vector: vec![1.0; m],
        eq_rhs: 0.0,
        bounds: vec![(-c * (1.0 - q), c * q); m],
    }
}

pub fn fit_svqr(data: &Dataset, q: f64, c: f64, kernel: &KernelSpec, opts: &FitOptions) -> Result<FitReport> {
    check_fit_inputs(data, c, kernel)?;
    check_level(q)?;
    let start = Instant::now();
    let gram = training_gram(data, kernel, opts.exec)?;
    let mut report = fit_svqr_gram(data, gram, q, c, kernel, opts)?;
    report.train_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Fit from a precomputed training Gram matrix; `train_seconds` covers the
/// solve only.
pub(crate) fn fit_svqr_gram(
    data: &Dataset,
    gram: Array2<f64>,
    q: f64,
    c: f64,
    kernel: &KernelSpec,
    opts: &FitOptions,
) -> Result<FitReport> {
    let start = Instant::now();
    let m = data.len();
    let y = data.targets.as_slice().expect("contiguous targets").to_vec();
    let problem = svqr_dual(gram, &y, q, c);
    let max_iter = opts.max_iter.unwrap_or(10 * m * m);
    let sol = solve_qp_box_eq(&problem, opts.qp_tol, max_iter)?;
    if sol.status != SolverStatus::Optimal {
        return Err(Error::Solver {
            status: sol.status,
            detail: format!(
                "SVQR dual (m = {m}, q = {q}, C = {c}) after {} iterations, certificate {:?}",
                sol.iterations, sol.certificate
            ),
        });
    }
    let u = sol.variables;
    let ku = gram_times(&problem.gram, &u);

    let margin = 1e-7 * c;
    let (hi, lo) = (c * q, -c * (1.0 - q));
    let interior: Vec<f64> = (0..m)
        .filter(|&k| (u[k] > margin && u[k] < hi - margin) || (u[k] < -margin && u[k] > lo + margin))
        .map(|k| y[k] - ku[k])
        .collect();
    let bias = if interior.is_empty() {
        let resid: Vec<f64> = y.iter().zip(&ku).map(|(y, f)| y - f).collect();
        pinball_offset(q, &resid)
    } else {
        interior.iter().sum::<f64>() / interior.len() as f64
    };

    let model = KernelModel::new(data.inputs.clone(), u, bias, *kernel)?;
    Ok(FitReport {
        sparsity_pct: model.default_sparsity(),
        model,
        solver_status: sol.status,
        train_seconds: start.elapsed().as_secs_f64(),
        objective_value: sol.objective_value,
        iterations: sol.iterations,
        certificate: Some(sol.certificate),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array1};

    fn line_data() -> Dataset {
        Dataset::new(array![[0.0], [1.0], [2.0], [3.0], [4.0]], array![0.3, 0.9, 2.4, 2.8, 4.5]).unwrap()
    }

    #[test]
    fn zero_targets_give_zero_model() {
        let d = Dataset::new(array![[0.0], [1.0], [2.0]], Array1::zeros(3)).unwrap();
        let r = fit_svqr(&d, 0.3, 1.0, &KernelSpec::rbf(1.0).unwrap(), &FitOptions::default()).unwrap();
        assert!(r.model.coefficients.iter().all(|c| *c == 0.0));
        assert_eq!(r.model.bias, 0.0);
        assert_eq!(r.objective_value, 0.0);
    }

    #[test]
    fn sign_counts_at_median() {
        let d = line_data();
        let r = fit_svqr(&d, 0.5, 10.0, &KernelSpec::linear(), &FitOptions::default()).unwrap();
        let f = r.model.predict_many(d.inputs.view()).unwrap();
        let below = d.targets.iter().zip(&f).filter(|(y, f)| **y < **f - 1e-9).count();
        let above = d.targets.iter().zip(&f).filter(|(y, f)| **y > **f + 1e-9).count();
        assert!(below as f64 <= 0.5 * 5.0 && above as f64 <= 0.5 * 5.0, "{below} {above}");
    }

    #[test]
    fn dual_feasibility_and_consistent_predictions() {
        let d = line_data();
        let (q, c) = (0.8, 3.0);
        let r = fit_svqr(&d, q, c, &KernelSpec::rbf(0.5).unwrap(), &FitOptions::default()).unwrap();
        let u = &r.model.coefficients;
        assert!(u.iter().all(|&v| v <= c * q + 1e-12 && v >= -c * (1.0 - q) - 1e-12));
        assert!(u.iter().sum::<f64>().abs() <= 1e-6);
        let gram = crate::kernel::gram_matrix(&r.model.kernel, d.inputs.view(), d.inputs.view()).unwrap();
        let ku = gram_times(&gram, u);
        let f = r.model.predict_many(d.inputs.view()).unwrap();
        for i in 0..5 {
            assert!((f[i] - ku[i] - r.model.bias).abs() <= 1e-8);
        }
    }

    #[test]
    fn invalid_inputs() {
        let d = line_data();
        let k = KernelSpec::linear();
        let o = FitOptions::default();
        assert!(fit_svqr(&d, 0.0, 1.0, &k, &o).is_err());
        assert!(fit_svqr(&d, 0.5, -1.0, &k, &o).is_err());
        assert!(fit_svqr(&d.slice_rows(0, 1), 0.5, 1.0, &k, &o).is_err());
    }

    #[test]
    fn repeated_fits_are_identical() {
        let d = line_data();
        let k = KernelSpec::rbf(0.3).unwrap();
        let a = fit_svqr(&d, 0.2, 5.0, &k, &FitOptions::default()).unwrap();
        let b = fit_svqr(&d, 0.2, 5.0, &k, &FitOptions::sequential()).unwrap();
        assert_eq!(a.model, b.model);
    }
}
