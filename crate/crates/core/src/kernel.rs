//! Kernel functions and Gram matrices.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Error, Result};
use crate::par::{self, Execution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    Linear,
    Rbf,
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelFamily::Linear => "linear",
            KernelFamily::Rbf => "rbf",
        })
    }
}

impl FromStr for KernelFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(KernelFamily::Linear),
            "rbf" => Ok(KernelFamily::Rbf),
            _ => invalid(format!("unknown kernel {s:?} (expected linear or rbf)")),
        }
    }
}

/// Kernel family plus the RBF exponent coefficient.
///
/// The RBF kernel is `exp(-width * ||a - b||^2)`; the linear kernel ignores
/// `width`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub width: f64,
}

impl KernelSpec {
    pub fn linear() -> Self {
        KernelSpec {
            family: KernelFamily::Linear,
            width: 1.0,
        }
    }

    pub fn rbf(width: f64) -> Result<Self> {
        let spec = KernelSpec {
            family: KernelFamily::Rbf,
            width,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.family == KernelFamily::Rbf && !(self.width > 0.0 && self.width.is_finite()) {
            return invalid(format!("RBF width must be positive and finite, got {}", self.width));
        }
        Ok(())
    }

    /// Evaluation without dimension checks; callers guarantee equal lengths.
    #[inline]
    pub(crate) fn eval_unchecked(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        match self.family {
            KernelFamily::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            KernelFamily::Rbf => {
                let d2: f64 = a
                    .iter()
                    .zip(b)
                    .map(|(x, y)| {
                        let d = x - y;
                        d * d
                    })
                    .sum();
                (-self.width * d2).exp()
            }
        }
    }
}

pub fn kernel_eval(spec: &KernelSpec, a: &[f64], b: &[f64]) -> Result<f64> {
    spec.validate()?;
    check_dim(a.len(), b.len())?;
    Ok(spec.eval_unchecked(a, b))
}

pub fn gram_matrix(spec: &KernelSpec, rows: ArrayView2<f64>, cols: ArrayView2<f64>) -> Result<Array2<f64>> {
    gram_matrix_with(Execution::default(), spec, rows, cols)
}

/// Dense Gram matrix, entry `(i, j) = k(rows_i, cols_j)`.
///
/// Every entry is computed independently, so the parallel and sequential
/// modes give bit-identical output.
pub fn gram_matrix_with(
    exec: Execution,
    spec: &KernelSpec,
    rows: ArrayView2<f64>,
    cols: ArrayView2<f64>,
) -> Result<Array2<f64>> {
    spec.validate()?;
    check_dim(rows.ncols(), cols.ncols())?;
    let rows = rows.as_standard_layout();
    let cols = cols.as_standard_layout();
    let (m, k) = (rows.nrows(), cols.nrows());
    let n = rows.ncols();
    let rs = rows.as_slice().expect("standard layout");
    let cs = cols.as_slice().expect("standard layout");
    let mut out = vec![0.0; m * k];
    par::fill_rows(exec, &mut out, k, |i, row| {
        let a = &rs[i * n..(i + 1) * n];
        for (j, v) in row.iter_mut().enumerate() {
            *v = spec.eval_unchecked(a, &cs[j * n..(j + 1) * n]);
        }
    });
    Ok(Array2::from_shape_vec((m, k), out).expect("shape"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn eval_examples() {
        let rbf1 = KernelSpec::rbf(1.0).unwrap();
        assert_eq!(kernel_eval(&rbf1, &[0.3, -2.0], &[0.3, -2.0]).unwrap(), 1.0);
        assert_eq!(kernel_eval(&KernelSpec::linear(), &[1.0, 2.0], &[3.0, 4.0]).unwrap(), 11.0);
        let rbf = KernelSpec::rbf(0.5).unwrap();
        assert_abs_diff_eq!(kernel_eval(&rbf, &[0.0], &[2.0]).unwrap(), 0.135_335_283_236_612_7, epsilon = 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        assert!(kernel_eval(&KernelSpec::linear(), &[1.0], &[1.0, 2.0]).is_err());
        let a = array![[1.0, 2.0]];
        let b = array![[1.0]];
        assert!(gram_matrix(&KernelSpec::linear(), a.view(), b.view()).is_err());
    }

    #[test]
    fn nonpositive_width_is_rejected() {
        assert!(KernelSpec::rbf(0.0).is_err());
        assert!(KernelSpec::rbf(-1.0).is_err());
        assert!(KernelSpec::rbf(f64::NAN).is_err());
    }

    #[test]
    fn linear_gram_outer_products() {
        let a = array![[1.0], [2.0]];
        let g = gram_matrix(&KernelSpec::linear(), a.view(), a.view()).unwrap();
        assert_eq!(g, array![[1.0, 2.0], [2.0, 4.0]]);
    }

    #[test]
    fn rbf_gram_is_psd() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for trial in 0..20 {
            let m = 2 + trial % 19;
            let a = Array2::from_shape_fn((m, 3), |_| rng.random_range(-2.0..2.0));
            let g = gram_matrix(&KernelSpec::rbf(0.7).unwrap(), a.view(), a.view()).unwrap();
            let mat = nalgebra::DMatrix::from_fn(m, m, |i, j| g[[i, j]]);
            let eig = mat.symmetric_eigen();
            let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(min >= -1e-8, "min eigenvalue {min}");
        }
    }

    #[test]
    fn parallel_matches_sequential_bitwise() {
        let a = Array2::from_shape_fn((37, 4), |(i, j)| ((i * 7 + j * 3) % 11) as f64 / 5.0);
        let spec = KernelSpec::rbf(0.3).unwrap();
        let s = gram_matrix_with(Execution::Sequential, &spec, a.view(), a.view()).unwrap();
        let p = gram_matrix_with(Execution::Parallel, &spec, a.view(), a.view()).unwrap();
        assert_eq!(s, p);
    }

    proptest! {
        #[test]
        fn gram_symmetric_with_unit_diagonal(
            pts in proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, 2), 1..15),
            width in 0.01f64..4.0,
        ) {
            let m = pts.len();
            let a = Array2::from_shape_fn((m, 2), |(i, j)| pts[i][j]);
            let g = gram_matrix(&KernelSpec::rbf(width).unwrap(), a.view(), a.view()).unwrap();
            for i in 0..m {
                prop_assert_eq!(g[[i, i]], 1.0);
                for j in 0..m {
                    prop_assert!((g[[i, j]] - g[[j, i]]).abs() <= 1e-12);
                }
            }
        }

        #[test]
        fn linear_ignores_width(a in proptest::collection::vec(-5.0f64..5.0, 3),
                                b in proptest::collection::vec(-5.0f64..5.0, 3),
                                w1 in 0.01f64..10.0, w2 in 0.01f64..10.0) {
            let k1 = KernelSpec { family: KernelFamily::Linear, width: w1 };
            let k2 = KernelSpec { family: KernelFamily::Linear, width: w2 };
            prop_assert_eq!(kernel_eval(&k1, &a, &b).unwrap(), kernel_eval(&k2, &a, &b).unwrap());
            prop_assert_eq!(kernel_eval(&k1, &a, &b).unwrap(), kernel_eval(&k1, &b, &a).unwrap());
        }
    }
}
