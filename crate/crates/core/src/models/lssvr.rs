//! Least-squares SVR through its bordered linear system.

use std::time::Instant;

use ndarray::{Array1, Array2};

use super::{check_fit_inputs, training_gram, FitOptions, FitReport, KernelModel};
use crate::data::Dataset;
use crate::error::Result;
use crate::kernel::KernelSpec;
use crate::solvers::{solve_linear_system, SolverStatus, DEFAULT_LINSYS_TOL};

/// `[[0, e'], [e, K + (2/C) I]] [b; alpha] = [0; y]`.
pub(crate) fn lssvr_system(gram: &Array2<f64>, y: &[f64], c: f64) -> (Array2<f64>, Array1<f64>) {
    let m = y.len();
    let mut a = Array2::zeros((m + 1, m + 1));
    let mut rhs = Array1::zeros(m + 1);
    for i in 0..m {
        a[[0, i + 1]] = 1.0;
        a[[i + 1, 0]] = 1.0;
        for j in 0..m {
            a[[i + 1, j + 1]] = gram[[i, j]];
        }
        a[[i + 1, i + 1]] += 2.0 / c;
        rhs[i + 1] = y[i];
    }
    (a, rhs)
}

pub fn fit_lssvr(data: &Dataset, c: f64, kernel: &KernelSpec, opts: &FitOptions) -> Result<FitReport> {
    check_fit_inputs(data, c, kernel)?;
    let start = Instant::now();
    let gram = training_gram(data, kernel, opts.exec)?;
    let y = data.targets.as_slice().expect("contiguous targets");
    let (a, rhs) = lssvr_system(&gram, y, c);
    let sol = solve_linear_system(a.view(), rhs.as_slice().expect("contiguous"), DEFAULT_LINSYS_TOL)?;
    let alpha = sol[1..].to_vec();
    // Regularized least squares objective 1/2 a'Ka + C sum xi^2 with
    // xi = (2/C) alpha from the system's stationarity rows.
    let ka = super::gram_times(&gram, &alpha);
    let quad: f64 = alpha.iter().zip(&ka).map(|(a, k)| a * k).sum();
    let xi2: f64 = alpha.iter().map(|a| (2.0 / c * a).powi(2)).sum();
    let model = KernelModel::new(data.inputs.clone(), alpha, sol[0], *kernel)?;
    Ok(FitReport {
        sparsity_pct: model.default_sparsity(),
        model,
        solver_status: SolverStatus::Optimal,
        train_seconds: start.elapsed().as_secs_f64(),
        objective_value: 0.5 * quad + c * xi2,
        iterations: 0,
        certificate: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};

    #[test]
    fn zero_targets() {
        let d = Dataset::new(array![[0.0], [1.0], [2.0]], Array1::zeros(3)).unwrap();
        let r = fit_lssvr(&d, 1.0, &KernelSpec::rbf(1.0).unwrap(), &FitOptions::default()).unwrap();
        assert!(r.model.coefficients.iter().all(|c| *c == 0.0));
        assert_eq!(r.model.bias, 0.0);
    }

    #[test]
    fn two_point_interpolation() {
        let d = Dataset::new(array![[0.0], [1.0]], array![0.0, 1.0]).unwrap();
        let r = fit_lssvr(&d, 1e6, &KernelSpec::linear(), &FitOptions::default()).unwrap();
        assert!(r.model.predict(&[0.0]).unwrap().abs() < 1e-3);
        assert!((r.model.predict(&[1.0]).unwrap() - 1.0).abs() < 1e-3);
        // Hand solution of the 3x3 system in the limit: (b, a1, a2) = (0, -1, 1).
        assert!((r.model.coefficients[0] + 1.0).abs() < 1e-3);
        assert!((r.model.coefficients[1] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn system_residual_on_random_data() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let x = Array2::from_shape_fn((30, 2), |_| rng.random_range(-2.0..2.0));
        let y: Vec<f64> = (0..30).map(|_| rng.random_range(-1.0..1.0)).collect();
        let k = KernelSpec::rbf(0.7).unwrap();
        let d = Dataset::new(x, Array1::from(y.clone())).unwrap();
        let r = fit_lssvr(&d, 8.0, &k, &FitOptions::default()).unwrap();
        let gram = crate::kernel::gram_matrix(&k, d.inputs.view(), d.inputs.view()).unwrap();
        let (a, rhs) = lssvr_system(&gram, &y, 8.0);
        let mut sol = vec![r.model.bias];
        sol.extend_from_slice(&r.model.coefficients);
        let res = a.dot(&Array1::from(sol)) - rhs;
        assert!(res.iter().all(|v| v.abs() <= 1e-8));
    }
}
