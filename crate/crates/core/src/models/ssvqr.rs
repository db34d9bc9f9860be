//! Sparse SVQR: L1-regularized kernel quantile regression as a linear program.

use std::time::Instant;

use ndarray::Array2;

use super::{check_fit_inputs, check_level, training_gram, FitOptions, FitReport, KernelModel};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::solvers::{solve_lp, LpProblem, SolverStatus};

/// LP over `(r, p, xi, xi*, b)` in that order, `4m + 1` variables:
///
/// `min 1/2 sum(r + p) + C sum(q xi + (1-q) xi*)`
/// s.t. `y_i - (K_i (r - p) + b) <= xi_i`, `K_i (r - p) + b - y_i <= xi*_i`,
/// with `r, p, xi, xi* >= 0` and `b` free.
pub fn ssvqr_lp(gram: &Array2<f64>, y: &[f64], q: f64, c: f64) -> LpProblem {
    let m = y.len();
    let nv = 4 * m + 1;
    let mut objective = vec![0.0; nv];
    for i in 0..m {
        objective[i] = 0.5;
        objective[m + i] = 0.5;
        objective[2 * m + i] = c * q;
        objective[3 * m + i] = c * (1.0 - q);
    }
    let mut a = Array2::zeros((2 * m, nv));
    let mut rhs = vec![0.0; 2 * m];
    for i in 0..m {
        for j in 0..m {
            let k = gram[[i, j]];
            a[[i, j]] = -k;
            a[[i, m + j]] = k;
            a[[m + i, j]] = k;
            a[[m + i, m + j]] = -k;
        }
        a[[i, 4 * m]] = -1.0;
        a[[i, 2 * m + i]] = -1.0;
        rhs[i] = -y[i];
        a[[m + i, 4 * m]] = 1.0;
        a[[m + i, 3 * m + i]] = -1.0;
        rhs[m + i] = y[i];
    }
    let mut bounds = vec![(0.0, f64::INFINITY); nv];
    bounds[4 * m] = (f64::NEG_INFINITY, f64::INFINITY);
    LpProblem::new(objective).with_ub(a, rhs).with_bounds(bounds)
}

pub fn fit_ssvqr(data: &Dataset, q: f64, c: f64, kernel: &KernelSpec, opts: &FitOptions) -> Result<FitReport> {
    check_fit_inputs(data, c, kernel)?;
    check_level(q)?;
    let start = Instant::now();
    let gram = training_gram(data, kernel, opts.exec)?;
    let mut report = fit_ssvqr_gram(data, &gram, q, c, kernel, opts)?;
    report.train_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

pub(crate) fn fit_ssvqr_gram(
    data: &Dataset,
    gram: &Array2<f64>,
    q: f64,
    c: f64,
    kernel: &KernelSpec,
    opts: &FitOptions,
) -> Result<FitReport> {
    let start = Instant::now();
    let m = data.len();
    let y = data.targets.as_slice().expect("contiguous targets");
    let lp = ssvqr_lp(gram, y, q, c);
    let max_iter = opts.max_iter.unwrap_or(50 * lp.num_vars());
    let sol = solve_lp(&lp, opts.lp_tol, max_iter)?;
    if sol.status != SolverStatus::Optimal {
        return Err(Error::Solver {
            status: sol.status,
            detail: format!(
                "SSVQR LP (m = {m}, q = {q}, C = {c}) after {} pivots, certificate {:?}",
                sol.iterations, sol.certificate
            ),
        });
    }
    let v = &sol.variables;
    let coefficients: Vec<f64> = (0..m).map(|i| v[i] - v[m + i]).collect();
    let model = KernelModel::new(data.inputs.clone(), coefficients, v[4 * m], *kernel)?;
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
    use crate::loss::pinball_unchecked;
    use ndarray::{array, Array1};

    fn line_data() -> Dataset {
        Dataset::new(array![[0.0], [1.0], [2.0], [3.0], [4.0]], array![0.3, 0.9, 2.4, 2.8, 4.5]).unwrap()
    }

    #[test]
    fn constant_targets_fit_exactly() {
        let d = Dataset::new(array![[0.0], [1.0], [5.0]], Array1::from_elem(3, 2.5)).unwrap();
        let r = fit_ssvqr(&d, 0.3, 4.0, &KernelSpec::rbf(1.0).unwrap(), &FitOptions::default()).unwrap();
        assert!(r.model.coefficients.iter().all(|c| *c == 0.0));
        assert!((r.model.bias - 2.5).abs() < 1e-12);
        assert!(r.objective_value.abs() < 1e-12);
        assert_eq!(r.sparsity_pct, 100.0);
    }

    #[test]
    fn sign_counts_and_objective_identity() {
        let d = line_data();
        let (q, c) = (0.5, 10.0);
        let r = fit_ssvqr(&d, q, c, &KernelSpec::linear(), &FitOptions::default()).unwrap();
        let f = r.model.predict_many(d.inputs.view()).unwrap();
        let below = d.targets.iter().zip(&f).filter(|(y, f)| **y < **f - 1e-9).count();
        let above = d.targets.iter().zip(&f).filter(|(y, f)| **y > **f + 1e-9).count();
        assert!(below as f64 <= q * 5.0 && above as f64 <= (1.0 - q) * 5.0);
        let l1: f64 = r.model.coefficients.iter().map(|u| u.abs()).sum();
        let loss: f64 = d.targets.iter().zip(&f).map(|(y, f)| pinball_unchecked(q, y - f)).sum();
        assert!((r.objective_value - (0.5 * l1 + c * loss)).abs() <= 1e-8);
    }

    #[test]
    fn lp_shape() {
        let gram = Array2::eye(3);
        let lp = ssvqr_lp(&gram, &[1.0, 2.0, 3.0], 0.2, 1.0);
        assert_eq!(lp.num_vars(), 13);
        assert_eq!(lp.ub_rhs.len(), 6);
        assert_eq!(lp.bounds[12], (f64::NEG_INFINITY, f64::INFINITY));
    }
}
