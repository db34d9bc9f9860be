//! Fitted kernel expansions and the four model constructors.

mod lssvr;
mod ssvqr;
mod svqr;
mod tube;

use std::path::Path;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{check_dim, invalid, Result};
use crate::kernel::{gram_matrix_with, KernelSpec};
use crate::par::{self, Execution};
use crate::solvers::{Certificate, SolverStatus, DEFAULT_LP_TOL, DEFAULT_QP_TOL};

pub use lssvr::fit_lssvr;
pub use ssvqr::{fit_ssvqr, ssvqr_lp};
pub use svqr::{fit_svqr, svqr_dual};
pub use tube::{fit_tube, TubeConfig, TubeFitReport, TubeObjective};

const MODEL_FORMAT: &str = "svmpi-kernel-model";
const MODEL_VERSION: u32 = 1;

/// Relative zero threshold used when none is given: `1e-6 * max|coef|`.
pub const DEFAULT_SPARSITY_REL_EPS: f64 = 1e-6;

/// `f(x) = sum_i coefficients_i * k(support_i, x) + bias`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelModel {
    pub support_inputs: Array2<f64>,
    pub coefficients: Vec<f64>,
    pub bias: f64,
    pub kernel: KernelSpec,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    #[serde(flatten)]
    model: KernelModel,
}

impl KernelModel {
    pub fn new(support_inputs: Array2<f64>, coefficients: Vec<f64>, bias: f64, kernel: KernelSpec) -> Result<Self> {
        let m = KernelModel {
            support_inputs,
            coefficients,
            bias,
            kernel,
        };
        m.validate()?;
        Ok(m)
    }

    /// Constant function `bias`.
    pub fn constant(n_features: usize, bias: f64, kernel: KernelSpec) -> Self {
        KernelModel {
            support_inputs: Array2::zeros((0, n_features)),
            coefficients: Vec::new(),
            bias,
            kernel,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        check_dim(self.support_inputs.nrows(), self.coefficients.len())?;
        if !self.bias.is_finite() || !self.coefficients.iter().all(|c| c.is_finite()) {
            return invalid("model parameters must be finite");
        }
        Ok(())
    }

    pub fn n_features(&self) -> usize {
        self.support_inputs.ncols()
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.n_features(), x.len())?;
        let sv = self.support_inputs.as_standard_layout();
        Ok(self.predict_flat(sv.as_slice().expect("standard layout"), x))
    }

    /// Zero coefficients are skipped, so sparse models evaluate fewer kernels.
    fn predict_flat(&self, support: &[f64], x: &[f64]) -> f64 {
        let n = x.len();
        let mut s = 0.0;
        for (i, &c) in self.coefficients.iter().enumerate() {
            if c != 0.0 {
                s += c * self.kernel.eval_unchecked(&support[i * n..(i + 1) * n], x);
            }
        }
        s + self.bias
    }

    pub fn predict_many(&self, xs: ArrayView2<f64>) -> Result<Vec<f64>> {
        self.predict_many_with(Execution::default(), xs)
    }

    pub fn predict_many_with(&self, exec: Execution, xs: ArrayView2<f64>) -> Result<Vec<f64>> {
        check_dim(self.n_features(), xs.ncols())?;
        let xs = xs.as_standard_layout();
        let sv = self.support_inputs.as_standard_layout();
        let support = sv.as_slice().expect("standard layout");
        let n = xs.ncols();
        let flat = xs.as_slice().expect("standard layout");
        Ok(par::map_indexed(exec, xs.nrows(), |i| self.predict_flat(support, &flat[i * n..(i + 1) * n])))
    }

    /// Percentage of coefficients with `|c| <= eps`.
    pub fn sparsity(&self, eps: f64) -> f64 {
        sparsity(self, eps)
    }

    /// Sparsity at the default relative threshold.
    pub fn default_sparsity(&self) -> f64 {
        let max = self.coefficients.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        sparsity(self, DEFAULT_SPARSITY_REL_EPS * max)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            format: MODEL_FORMAT.to_owned(),
            version: MODEL_VERSION,
            model: self.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format != MODEL_FORMAT {
            return invalid(format!("not a model file (format {:?})", file.format));
        }
        if file.version != MODEL_VERSION {
            return invalid(format!("unsupported model file version {}", file.version));
        }
        file.model.validate()?;
        Ok(file.model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

pub fn predict(model: &KernelModel, x: &[f64]) -> Result<f64> {
    model.predict(x)
}

pub fn sparsity(model: &KernelModel, eps: f64) -> f64 {
    let m = model.coefficients.len();
    if m == 0 {
        return 100.0;
    }
    let zeros = model.coefficients.iter().filter(|c| c.abs() <= eps).count();
    100.0 * zeros as f64 / m as f64
}

/// Solver and execution settings shared by the model constructors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub qp_tol: f64,
    pub lp_tol: f64,
    /// Overrides the per-solver default iteration cap.
    pub max_iter: Option<usize>,
    pub exec: Execution,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            qp_tol: DEFAULT_QP_TOL,
            lp_tol: DEFAULT_LP_TOL,
            max_iter: None,
            exec: Execution::default(),
        }
    }
}

impl FitOptions {
    pub fn sequential() -> Self {
        FitOptions {
            exec: Execution::Sequential,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub model: KernelModel,
    pub solver_status: SolverStatus,
    pub train_seconds: f64,
    pub sparsity_pct: f64,
    pub objective_value: f64,
    pub iterations: usize,
    /// Residuals of the underlying solve (absent for direct linear solves).
    pub certificate: Option<Certificate>,
}

pub(crate) fn check_fit_inputs(data: &Dataset, c: f64, kernel: &KernelSpec) -> Result<()> {
    data.validate()?;
    kernel.validate()?;
    if data.len() < 2 {
        return invalid("at least two training points are required");
    }
    if !(c > 0.0 && c.is_finite()) {
        return invalid(format!("C must be positive and finite, got {c}"));
    }
    Ok(())
}

pub(crate) fn check_level(q: f64) -> Result<()> {
    if !(q > 0.0 && q < 1.0) {
        return invalid(format!("quantile level must lie in (0, 1), got {q}"));
    }
    Ok(())
}

pub(crate) fn training_gram(data: &Dataset, kernel: &KernelSpec, exec: Execution) -> Result<Array2<f64>> {
    gram_matrix_with(exec, kernel, data.inputs.view(), data.inputs.view())
}

/// `K u` for a symmetric Gram matrix.
pub(crate) fn gram_times(gram: &Array2<f64>, u: &[f64]) -> Vec<f64> {
    gram.rows()
        .into_iter()
        .map(|row| row.iter().zip(u).map(|(k, u)| k * u).sum())
        .collect()
}

/// Smallest minimizer of `sum_i pinball(q, r_i - b)` over `b`.
pub(crate) fn pinball_offset(q: f64, residuals: &[f64]) -> f64 {
    let mut r = residuals.to_vec();
    r.sort_by(f64::total_cmp);
    let m = r.len();
    // Any b between the ceil(qm)-th order statistic and the next one is
    // optimal; the objective's subgradient changes sign there.
    let k = ((q * m as f64).ceil() as usize).clamp(1, m);
    r[k - 1]
}
