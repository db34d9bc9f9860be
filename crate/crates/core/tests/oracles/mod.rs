//! Brute-force reference solutions for small LPs and box-plus-equality QPs.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use svmpi::solvers::{LpProblem, QpBoxEqProblem};

/// Every subset of `k` items from `0..n`.
fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

pub fn random_lp(rng: &mut ChaCha8Rng) -> LpProblem {
    let n = rng.random_range(1..=5);
    let n_ub = rng.random_range(0..=4);
    let n_eq = rng.random_range(0..=1.min(n - 1));
    let mut draw = |r: usize| Array2::from_shape_fn((r, n), |_| (rng.random_range(-4..=4)) as f64);
    let ub = draw(n_ub);
    let eq = draw(n_eq);
    let objective: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
    let ub_rhs: Vec<f64> = (0..n_ub).map(|_| rng.random_range(-2.0..6.0)).collect();
    let eq_rhs: Vec<f64> = (0..n_eq).map(|_| rng.random_range(-2.0..4.0)).collect();
    let bounds = (0..n)
        .map(|_| {
            let lo = rng.random_range(-3.0..1.0);
            (lo, lo + rng.random_range(0.5..4.0))
        })
        .collect();
    LpProblem::new(objective).with_ub(ub, ub_rhs).with_eq(eq, eq_rhs).with_bounds(bounds)
}

/// Minimum over all feasible vertices of a bounded LP, `None` if empty.
pub fn vertex_minimum(p: &LpProblem) -> Option<f64> {
    let n = p.num_vars();
    // Candidate active rows: (a, b) meaning a'x = b.
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for (r, &b) in p.ub_matrix.rows().into_iter().zip(&p.ub_rhs) {
        rows.push((r.to_vec(), b));
    }
    for (j, &(lo, hi)) in p.bounds.iter().enumerate() {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        rows.push((e.clone(), lo));
        rows.push((e, hi));
    }
    let eq: Vec<(Vec<f64>, f64)> = p.eq_matrix.rows().into_iter().zip(&p.eq_rhs).map(|(r, &b)| (r.to_vec(), b)).collect();
    let free = n - eq.len();
    let mut best: Option<f64> = None;
    for pick in subsets(rows.len(), free) {
        let active: Vec<&(Vec<f64>, f64)> = eq.iter().chain(pick.iter().map(|&i| &rows[i])).collect();
        let a = DMatrix::from_fn(n, n, |i, j| active[i].0[j]);
        let b = DVector::from_fn(n, |i, _| active[i].1);
        if a.determinant().abs() < 1e-9 {
            continue;
        }
        let Some(x) = a.lu().solve(&b) else { continue };
        let x: Vec<f64> = x.iter().copied().collect();
        if p.primal_violation(&x) <= 1e-9 {
            let v = p.objective_at(&x);
            best = Some(best.map_or(v, |b: f64| b.min(v)));
        }
    }
    best
}

pub fn random_qp(rng: &mut ChaCha8Rng) -> QpBoxEqProblem {
    let n = rng.random_range(2..=6);
    let b = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let g = b.transpose() * &b + DMatrix::identity(n, n) * 0.1;
    let eq_vector: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
    let bounds: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            let lo = rng.random_range(-2.0..0.0);
            (lo, lo + rng.random_range(0.5..3.0))
        })
        .collect();
    // Right-hand side reachable inside the box.
    let x0: Vec<f64> = bounds.iter().map(|&(lo, hi)| rng.random_range(lo..hi)).collect();
    let eq_rhs = eq_vector.iter().zip(&x0).map(|(a, x)| a * x).sum();
    QpBoxEqProblem {
        gram: Array2::from_shape_fn((n, n), |(i, j)| g[(i, j)]),
        linear: (0..n).map(|_| rng.random_range(-2.0..2.0)).collect(),
        eq_vector,
        eq_rhs,
        bounds,
    }
}

/// Minimum over faces: each variable fixed at a bound or free, with the
/// free block solved from the equality-constrained stationarity system.
pub fn active_set_minimum(p: &QpBoxEqProblem) -> f64 {
    let n = p.num_vars();
    let mut best = f64::INFINITY;
    for code in 0..3usize.pow(n as u32) {
        let mut x = vec![0.0; n];
        let mut free = Vec::new();
        let mut c = code;
        for (j, xj) in x.iter_mut().enumerate() {
            match c % 3 {
                0 => *xj = p.bounds[j].0,
                1 => *xj = p.bounds[j].1,
                _ => free.push(j),
            }
            c /= 3;
        }
        if free.is_empty() {
            let lhs: f64 = p.eq_vector.iter().zip(&x).map(|(a, x)| a * x).sum();
            if (lhs - p.eq_rhs).abs() > 1e-12 {
                continue;
            }
        } else {
            let k = free.len();
            let mut kkt = DMatrix::zeros(k + 1, k + 1);
            let mut rhs = DVector::zeros(k + 1);
            for (r, &i) in free.iter().enumerate() {
                for (s, &j) in free.iter().enumerate() {
                    kkt[(r, s)] = p.gram[[i, j]];
                }
                kkt[(r, k)] = p.eq_vector[i];
                kkt[(k, r)] = p.eq_vector[i];
                let fixed: f64 = (0..n).filter(|j| !free.contains(j)).map(|j| p.gram[[i, j]] * x[j]).sum();
                rhs[r] = -p.linear[i] - fixed;
            }
            let fixed_eq: f64 = (0..n).filter(|j| !free.contains(j)).map(|j| p.eq_vector[j] * x[j]).sum();
            rhs[k] = p.eq_rhs - fixed_eq;
            let Some(sol) = kkt.lu().solve(&rhs) else { continue };
            for (r, &i) in free.iter().enumerate() {
                x[i] = sol[r];
            }
            let inside = free.iter().all(|&i| x[i] >= p.bounds[i].0 - 1e-12 && x[i] <= p.bounds[i].1 + 1e-12);
            if !inside {
                continue;
            }
        }
        best = best.min(p.objective_at(&x));
    }
    best
}
