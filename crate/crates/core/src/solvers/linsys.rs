use ndarray::ArrayView2;

use crate::error::{check_dim, invalid, Error, Result};

/// LU factorization with partial (row) pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct LuFactors {
    n: usize,
    // L (unit diagonal, strictly lower part) and U packed row-major.
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl LuFactors {
    pub fn factor(a: ArrayView2<f64>) -> Result<Self> {
        let n = a.nrows();
        check_dim(n, a.ncols())?;
        let lu: Vec<f64> = a.iter().copied().collect();
        Self::factor_vec(n, lu)
    }

    /// Factor a row-major `n x n` matrix given as a flat vector.
    pub(crate) fn factor_vec(n: usize, mut lu: Vec<f64>) -> Result<Self> {
        debug_assert_eq!(lu.len(), n * n);
        if lu.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix entry".into()));
        }
        let scale = lu.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut perm: Vec<usize> = (0..n).collect();
        let tiny = f64::EPSILON * scale.max(f64::MIN_POSITIVE) * n.max(1) as f64;
        let mut max_piv = 0.0f64;
        let mut min_piv = f64::INFINITY;
        for k in 0..n {
            let (p, pv) = (k..n)
                .map(|i| (i, lu[i * n + k].abs()))
                .fold((k, -1.0), |best, c| if c.1 > best.1 { c } else { best });
            max_piv = max_piv.max(pv);
            min_piv = min_piv.min(pv);
            if pv <= tiny {
                let condition = if pv > 0.0 { max_piv / pv } else { f64::INFINITY };
                return Err(Error::Singular {
                    column: k,
                    pivot: pv,
                    condition,
                });
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let piv = lu[k * n + k];
            let (head, tail) = lu.split_at_mut((k + 1) * n);
            let krow = &head[k * n..];
            for row in tail.chunks_mut(n) {
                let f = row[k] / piv;
                if f == 0.0 {
                    continue;
                }
                row[k] = f;
                for j in (k + 1)..n {
                    row[j] -= f * krow[j];
                }
            }
        }
        Ok(LuFactors { n, lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Ratio of largest to smallest pivot magnitude; a cheap conditioning hint.
    pub fn pivot_ratio(&self) -> f64 {
        let d = (0..self.n).map(|i| self.lu[i * self.n + i].abs());
        let (lo, hi) = d.fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
        if lo > 0.0 {
            hi / lo
        } else {
            f64::INFINITY
        }
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| rhs[p]).collect();
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            let s: f64 = row.iter().zip(&x[..i]).map(|(a, b)| a * b).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n + i + 1..(i + 1) * n];
            let s: f64 = row.iter().zip(&x[i + 1..]).map(|(a, b)| a * b).sum();
            x[i] = (x[i] - s) / self.lu[i * n + i];
        }
        x
    }

    /// Solve `A^T x = rhs`.
    pub fn solve_transpose(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.n;
        // A^T = U^T L^T P, so solve U^T z = rhs, L^T w = z, x = P^T w.
        let mut z = rhs.to_vec();
        for i in 0..n {
            let mut s = z[i];
            for k in 0..i {
                s -= self.lu[k * n + i] * z[k];
            }
            z[i] = s / self.lu[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for k in (i + 1)..n {
                s -= self.lu[k * n + i] * z[k];
            }
            z[i] = s;
        }
        let mut x = vec![0.0; n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = z[i];
        }
        x
    }
}

fn residual_inf(a: ArrayView2<f64>, x: &[f64], rhs: &[f64]) -> (Vec<f64>, f64) {
    let r: Vec<f64> = a
        .rows()
        .into_iter()
        .zip(rhs)
        .map(|(row, b)| b - row.iter().zip(x).map(|(a, x)| a * x).sum::<f64>())
        .collect();
    let norm = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    (r, norm)
}

/// Solve `m x = rhs` by pivoted LU with one step of iterative refinement.
///
/// The returned solution satisfies `||m x - rhs||_inf <= tol (1 + ||rhs||_inf)`;
/// otherwise the system is reported as numerically singular.
pub fn solve_linear_system(m: ArrayView2<f64>, rhs: &[f64], tol: f64) -> Result<Vec<f64>> {
    if !(tol > 0.0) {
        return invalid("tolerance must be positive");
    }
    check_dim(m.nrows(), m.ncols())?;
    check_dim(m.nrows(), rhs.len())?;
    let lu = LuFactors::factor(m)?;
    let mut x = lu.solve(rhs);
    let (r, _) = residual_inf(m, &x, rhs);
    let dx = lu.solve(&r);
    for (xi, d) in x.iter_mut().zip(&dx) {
        *xi += d;
    }
    let (_, norm) = residual_inf(m, &x, rhs);
    let bound = tol * (1.0 + rhs.iter().fold(0.0f64, |a, v| a.max(v.abs())));
    if !(norm <= bound) {
        return Err(Error::Singular {
            column: m.nrows(),
            pivot: norm,
            condition: lu.pivot_ratio(),
        });
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use rand::{Rng, SeedableRng};

    #[test]
    fn identity() {
        let m = Array2::<f64>::eye(3);
        let x = solve_linear_system(m.view(), &[1.0, 2.0, 3.0], 1e-8).unwrap();
        assert_eq!(x, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn swap_needs_pivoting() {
        let m = array![[0.0, 1.0], [1.0, 0.0]];
        let x = solve_linear_system(m.view(), &[2.0, 5.0], 1e-8).unwrap();
        assert_eq!(x, vec![5.0, 2.0]);
    }

    #[test]
    fn random_well_conditioned() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let m = Array2::from_shape_fn((6, 6), |(i, j)| {
                rng.random_range(-1.0..1.0) + if i == j { 6.0 } else { 0.0 }
            });
            let b: Vec<f64> = (0..6).map(|_| rng.random_range(-10.0..10.0)).collect();
            let x = solve_linear_system(m.view(), &b, 1e-8).unwrap();
            let (_, res) = residual_inf(m.view(), &x, &b);
            assert!(res <= 1e-8, "residual {res}");
        }
    }

    #[test]
    fn singular_reports_condition() {
        let m = array![[1.0, 2.0], [2.0, 4.0]];
        match solve_linear_system(m.view(), &[1.0, 1.0], 1e-8) {
            Err(Error::Singular { condition, .. }) => assert!(condition > 1e10),
            other => panic!("expected singular error, got {other:?}"),
        }
    }

    #[test]
    fn transpose_solve() {
        let m = array![[2.0, 1.0, 0.0], [0.0, 3.0, 1.0], [4.0, 0.0, 1.0]];
        let lu = LuFactors::factor(m.view()).unwrap();
        let x = lu.solve_transpose(&[1.0, 2.0, 3.0]);
        let mt = m.t().to_owned();
        let (_, res) = residual_inf(mt.view(), &x, &[1.0, 2.0, 3.0]);
        assert!(res < 1e-12);
    }

    #[test]
    fn shape_errors() {
        let m = Array2::<f64>::zeros((2, 3));
        assert!(solve_linear_system(m.view(), &[1.0, 1.0], 1e-8).is_err());
        let m = Array2::<f64>::eye(2);
        assert!(solve_linear_system(m.view(), &[1.0], 1e-8).is_err());
    }
}
