//! Pairwise decomposition (SMO-style) solver for
//! `min 1/2 x'Gx + l'x` subject to `a'x = rhs`, `lo <= x <= hi`.
//!
//! Coordinates with `a_i != 0` are moved in pairs along directions that keep
//! `a'x` fixed; the pair is the maximal-violating lower index plus the
//! partner with the best second-order decrease. Coordinates with `a_i = 0`
//! are not tied to the equality and get exact single-coordinate steps.

use ndarray::Array2;

use super::{Certificate, SolverSolution, SolverStatus};
use crate::error::{invalid, Result};

const TAU: f64 = 1e-12;
const MAX_GRADIENT_REFRESH: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct QpBoxEqProblem {
    /// Symmetric positive semi-definite matrix of the quadratic form.
    pub gram: Array2<f64>,
    pub linear: Vec<f64>,
    pub eq_vector: Vec<f64>,
    pub eq_rhs: f64,
    pub bounds: Vec<(f64, f64)>,
}

impl QpBoxEqProblem {
    pub fn num_vars(&self) -> usize {
        self.linear.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.gram.nrows() != n || self.gram.ncols() != n {
            return invalid("gram must be n x n");
        }
        if self.eq_vector.len() != n || self.bounds.len() != n {
            return invalid("equality vector and bounds must have one entry per variable");
        }
        let scale = self.gram.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for i in 0..n {
            for j in 0..i {
                if (self.gram[[i, j]] - self.gram[[j, i]]).abs() > 1e-10 * scale {
                    return invalid(format!("gram is not symmetric at ({i}, {j})"));
                }
            }
        }
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return invalid(format!("inconsistent bounds for variable {j}: [{lo}, {hi}]"));
            }
        }
        let finite = self.gram.iter().all(|v| v.is_finite())
            && self.linear.iter().all(|v| v.is_finite())
            && self.eq_vector.iter().all(|v| v.is_finite())
            && self.eq_rhs.is_finite();
        if !finite {
            return invalid("QP data must be finite");
        }
        Ok(())
    }

    pub fn objective_at(&self, x: &[f64]) -> f64 {
        let n = self.num_vars();
        let mut quad = 0.0;
        for i in 0..n {
            let row = self.gram.row(i);
            let gi: f64 = row.iter().zip(x).map(|(g, x)| g * x).sum();
            quad += x[i] * gi;
        }
        0.5 * quad + self.linear.iter().zip(x).map(|(l, x)| l * x).sum::<f64>()
    }
}

struct State<'a> {
    p: &'a QpBoxEqProblem,
    x: Vec<f64>,
    g: Vec<f64>,
    /// `1 / a_i` for equality-coupled coordinates, 0 otherwise.
    scale: Vec<f64>,
    coupled: Vec<usize>,
    free: Vec<usize>,
}

#[derive(Debug, Clone, Copy)]
struct Violation {
    /// Coupled pair gap `max_down gz - min_up gz` (0 when undefined).
    gap: f64,
    up: Option<usize>,
    nu: f64,
    /// Largest projected-gradient violation among uncoupled coordinates.
    free_viol: f64,
    free_idx: Option<usize>,
}

impl<'a> State<'a> {
    fn z_bounds(&self, i: usize) -> (f64, f64) {
        let a = self.p.eq_vector[i];
        let (lo, hi) = self.p.bounds[i];
        if a > 0.0 {
            (a * lo, a * hi)
        } else {
            (a * hi, a * lo)
        }
    }

    fn gz(&self, i: usize) -> f64 {
        self.g[i] * self.scale[i]
    }

    fn can_up(&self, i: usize) -> bool {
        // z_i = a_i x_i can increase
        let a = self.p.eq_vector[i];
        let (lo, hi) = self.p.bounds[i];
        if a > 0.0 {
            self.x[i] < hi
        } else {
            self.x[i] > lo
        }
    }

    fn can_down(&self, i: usize) -> bool {
        let a = self.p.eq_vector[i];
        let (lo, hi) = self.p.bounds[i];
        if a > 0.0 {
            self.x[i] > lo
        } else {
            self.x[i] < hi
        }
    }

    fn refresh_gradient(&mut self) {
        let n = self.x.len();
        for i in 0..n {
            let row = self.p.gram.row(i);
            self.g[i] = self.p.linear[i] + row.iter().zip(&self.x).map(|(g, x)| g * x).sum::<f64>();
        }
    }

    fn add_to_x(&mut self, i: usize, dx: f64, target: Option<f64>) {
        if dx == 0.0 {
            return;
        }
        let row = self.p.gram.row(i);
        for (gk, gik) in self.g.iter_mut().zip(row.iter()) {
            *gk += dx * gik;
        }
        self.x[i] = match target {
            Some(t) => t,
            None => self.x[i] + dx,
        };
    }

    fn violation(&self) -> Violation {
        let mut up: Option<(usize, f64)> = None;
        let mut down: Option<f64> = None;
        for &i in &self.coupled {
            let gz = self.gz(i);
            if self.can_up(i) && up.is_none_or(|(_, v)| gz < v) {
                up = Some((i, gz));
            }
            if self.can_down(i) && down.is_none_or(|v| gz > v) {
                down = Some(gz);
            }
        }
        let (gap, nu) = match (up, down) {
            (Some((_, lo)), Some(hi)) => ((hi - lo).max(0.0), 0.5 * (hi + lo)),
            (Some((_, lo)), None) => (0.0, lo),
            (None, Some(hi)) => (0.0, hi),
            (None, None) => (0.0, 0.0),
        };
        let mut free_viol = 0.0;
        let mut free_idx = None;
        for &k in &self.free {
            let (lo, hi) = self.p.bounds[k];
            let g = self.g[k];
            let v = if g > 0.0 && self.x[k] > lo || g < 0.0 && self.x[k] < hi {
                g.abs()
            } else {
                0.0
            };
            if v > free_viol {
                free_viol = v;
                free_idx = Some(k);
            }
        }
        Violation {
            gap,
            up: up.map(|(i, _)| i),
            nu,
            free_viol,
            free_idx,
        }
    }

    /// Exact minimization along coordinate `k` within its box.
    fn coordinate_step(&mut self, k: usize) -> bool {
        let (lo, hi) = self.p.bounds[k];
        let gkk = self.p.gram[[k, k]];
        let g = self.g[k];
        let target = if gkk > TAU {
            (self.x[k] - g / gkk).clamp(lo, hi)
        } else if g > 0.0 {
            lo
        } else {
            hi
        };
        if !target.is_finite() {
            return false;
        }
        let dx = target - self.x[k];
        self.add_to_x(k, dx, Some(target));
        true
    }

    /// Move `z_i` up and `z_j` down by the best feasible step.
    fn pair_step(&mut self, i: usize, j: usize) -> bool {
        let (si, sj) = (self.scale[i], self.scale[j]);
        let gram = &self.p.gram;
        let eta = gram[[i, i]] * si * si + gram[[j, j]] * sj * sj - 2.0 * gram[[i, j]] * si * sj;
        let b = self.gz(j) - self.gz(i);
        let (_, zhi_i) = self.z_bounds(i);
        let (zlo_j, _) = self.z_bounds(j);
        let zi = self.x[i] / si;
        let zj = self.x[j] / sj;
        let room_i = zhi_i - zi;
        let room_j = zj - zlo_j;
        let mut t = if eta > TAU { b / eta } else { f64::INFINITY };
        let mut hit_i = false;
        let mut hit_j = false;
        if room_i <= t {
            t = room_i;
            hit_i = true;
        }
        if room_j <= t {
            t = room_j;
            hit_j = true;
            hit_i = hit_i && room_i <= room_j;
        }
        if !t.is_finite() {
            return false;
        }
        let bound_of = |k: usize, up: bool| {
            let a = self.p.eq_vector[k];
            let (lo, hi) = self.p.bounds[k];
            if up == (a > 0.0) {
                hi
            } else {
                lo
            }
        };
        let ti = if hit_i { Some(bound_of(i, true)) } else { None };
        let tj = if hit_j { Some(bound_of(j, false)) } else { None };
        self.add_to_x(i, t * si, ti);
        self.add_to_x(j, -t * sj, tj);
        true
    }

    fn select_partner(&self, i: usize) -> Option<usize> {
        let gi = self.gz(i);
        let si = self.scale[i];
        let gram = &self.p.gram;
        let qii = gram[[i, i]] * si * si;
        let mut best: Option<(usize, f64)> = None;
        for &j in &self.coupled {
            if j == i || !self.can_down(j) {
                continue;
            }
            let b = self.gz(j) - gi;
            if b <= 0.0 {
                continue;
            }
            let sj = self.scale[j];
            let mut eta = qii + gram[[j, j]] * sj * sj - 2.0 * gram[[i, j]] * si * sj;
            if eta <= TAU {
                eta = TAU;
            }
            let score = b * b / eta;
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((j, score));
            }
        }
        best.map(|(j, _)| j)
    }

    fn certificate(&self) -> Certificate {
        let p = self.p;
        let mut primal = 0.0f64;
        for (k, &(lo, hi)) in p.bounds.iter().enumerate() {
            primal = primal.max(lo - self.x[k]).max(self.x[k] - hi);
        }
        let ax: f64 = p.eq_vector.iter().zip(&self.x).map(|(a, x)| a * x).sum();
        primal = primal.max((ax - p.eq_rhs).abs());
        let v = self.violation();
        let mut comp = 0.0f64;
        for &i in &self.coupled {
            if self.can_up(i) && self.can_down(i) {
                comp = comp.max((self.gz(i) - v.nu).abs());
            }
        }
        for &k in &self.free {
            let (lo, hi) = p.bounds[k];
            if self.x[k] > lo && self.x[k] < hi {
                comp = comp.max(self.g[k].abs());
            }
        }
        Certificate {
            primal,
            dual: v.gap.max(v.free_viol),
            complementarity: comp,
        }
    }
}

pub fn solve_qp_box_eq(p: &QpBoxEqProblem, tol: f64, max_iter: usize) -> Result<SolverSolution> {
    p.validate()?;
    if !(tol > 0.0) {
        return invalid("tolerance must be positive");
    }
    let n = p.num_vars();
    let scale: Vec<f64> = p.eq_vector.iter().map(|&a| if a != 0.0 { 1.0 / a } else { 0.0 }).collect();
    let coupled: Vec<usize> = (0..n).filter(|&i| p.eq_vector[i] != 0.0).collect();
    let free: Vec<usize> = (0..n).filter(|&i| p.eq_vector[i] == 0.0).collect();

    // Feasible start: the point of the box closest to the origin, then fill
    // the equality residual greedily in index order.
    let mut x: Vec<f64> = p.bounds.iter().map(|&(lo, hi)| 0.0f64.clamp(lo, hi)).collect();
    let mut resid = p.eq_rhs - p.eq_vector.iter().zip(&x).map(|(a, x)| a * x).sum::<f64>();
    for &i in &coupled {
        if resid == 0.0 {
            break;
        }
        let a = p.eq_vector[i];
        let (lo, hi) = p.bounds[i];
        let want = x[i] + resid / a;
        let moved = want.clamp(lo, hi);
        resid -= a * (moved - x[i]);
        x[i] = moved;
    }
    let rhs_scale = 1.0 + p.eq_rhs.abs();
    let mut st = State {
        p,
        g: vec![0.0; n],
        x,
        scale,
        coupled,
        free,
    };
    st.refresh_gradient();
    if resid.abs() > tol * rhs_scale {
        return Ok(finish(&st, SolverStatus::Infeasible, 0, tol));
    }

    let mut iters = 0usize;
    let mut refreshes = 0usize;
    loop {
        let v = st.violation();
        if v.gap.max(v.free_viol) <= tol {
            // Confirm with an exact gradient before declaring optimality.
            st.refresh_gradient();
            let v = st.violation();
            if v.gap.max(v.free_viol) <= tol || refreshes >= MAX_GRADIENT_REFRESH {
                return Ok(finish(&st, SolverStatus::Optimal, iters, tol));
            }
            refreshes += 1;
            continue;
        }
        if iters >= max_iter {
            return Ok(finish(&st, SolverStatus::IterationLimit, iters, tol));
        }
        iters += 1;
        let progressed = if v.free_viol >= v.gap {
            st.coordinate_step(v.free_idx.expect("violating coordinate"))
        } else {
            let i = v.up.expect("violating pair");
            match st.select_partner(i) {
                Some(j) => st.pair_step(i, j),
                None => false,
            }
        };
        if !progressed {
            return Ok(finish(&st, SolverStatus::Unbounded, iters, tol));
        }
    }
}

fn finish(st: &State<'_>, status: SolverStatus, iterations: usize, tol: f64) -> SolverSolution {
    let certificate = st.certificate();
    let status = if status == SolverStatus::Optimal && !certificate.within(tol) {
        SolverStatus::IterationLimit
    } else {
        status
    };
    let objective_value = 0.5
        * st
            .x
            .iter()
            .zip(st.g.iter().zip(&st.p.linear))
            .map(|(x, (g, l))| x * (g + l))
            .sum::<f64>();
    SolverSolution {
        variables: st.x.clone(),
        objective_value,
        status,
        certificate,
        iterations,
    }
}
