//! Dense two-phase primal simplex.
//!
//! Problems are converted to `min c'x, A x = b, x >= 0` with `b >= 0`. A crash
//! basis is built from singleton columns (slacks and any structural column
//! that appears in a single row), so artificial variables are only added for
//! rows that have no such column. Pricing is Dantzig's rule with lowest-index
//! tie-breaking; after a run of degenerate pivots it falls back to Bland's
//! rule until the objective moves again. At optimality the final basis is
//! refactorized from the original data and primal/dual values recomputed.

use ndarray::Array2;

use super::linsys::LuFactors;
use super::{Certificate, SolverSolution, SolverStatus};
use crate::error::{invalid, Result};

const PIVOT_TOL: f64 = 1e-9;
const DROP_TOL: f64 = 1e-14;
const DEGENERATE_RUN: usize = 50;
const MAX_REFACTOR: usize = 3;

/// `min c'x` subject to `A_eq x = b_eq`, `A_ub x <= b_ub`, `lo <= x <= hi`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub eq_matrix: Array2<f64>,
    pub eq_rhs: Vec<f64>,
    pub ub_matrix: Array2<f64>,
    pub ub_rhs: Vec<f64>,
    /// Per-variable `(lower, upper)`; infinities allowed.
    pub bounds: Vec<(f64, f64)>,
}

impl LpProblem {
    /// Problem with no constraints and every variable in `[0, inf)`.
    pub fn new(objective: Vec<f64>) -> Self {
        let n = objective.len();
        LpProblem {
            objective,
            eq_matrix: Array2::zeros((0, n)),
            eq_rhs: vec![],
            ub_matrix: Array2::zeros((0, n)),
            ub_rhs: vec![],
            bounds: vec![(0.0, f64::INFINITY); n],
        }
    }

    pub fn with_eq(mut self, matrix: Array2<f64>, rhs: Vec<f64>) -> Self {
        self.eq_matrix = matrix;
        self.eq_rhs = rhs;
        self
    }

    pub fn with_ub(mut self, matrix: Array2<f64>, rhs: Vec<f64>) -> Self {
        self.ub_matrix = matrix;
        self.ub_rhs = rhs;
        self
    }

    pub fn with_bounds(mut self, bounds: Vec<(f64, f64)>) -> Self {
        self.bounds = bounds;
        self
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.eq_matrix.ncols() != n || self.ub_matrix.ncols() != n {
            return invalid("constraint matrices must have one column per variable");
        }
        if self.eq_matrix.nrows() != self.eq_rhs.len() || self.ub_matrix.nrows() != self.ub_rhs.len() {
            return invalid("constraint right-hand sides must match matrix rows");
        }
        if self.bounds.len() != n {
            return invalid("one (lower, upper) bound pair required per variable");
        }
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return invalid(format!("inconsistent bounds for variable {j}: [{lo}, {hi}]"));
            }
        }
        let finite = self.objective.iter().all(|v| v.is_finite())
            && self.eq_matrix.iter().all(|v| v.is_finite())
            && self.ub_matrix.iter().all(|v| v.is_finite())
            && self.eq_rhs.iter().all(|v| v.is_finite())
            && self.ub_rhs.iter().all(|v| v.is_finite());
        if !finite {
            return invalid("LP data must be finite");
        }
        Ok(())
    }

    /// Worst violation of constraints and bounds at `x`.
    pub fn primal_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (row, b) in self.eq_matrix.rows().into_iter().zip(&self.eq_rhs) {
            let ax: f64 = row.iter().zip(x).map(|(a, x)| a * x).sum();
            worst = worst.max((ax - b).abs());
        }
        for (row, b) in self.ub_matrix.rows().into_iter().zip(&self.ub_rhs) {
            let ax: f64 = row.iter().zip(x).map(|(a, x)| a * x).sum();
            worst = worst.max(ax - b);
        }
        for (&(lo, hi), &v) in self.bounds.iter().zip(x) {
            worst = worst.max(lo - v).max(v - hi);
        }
        worst
    }

    pub fn objective_at(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, x)| c * x).sum()
    }
}

#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// `x = lo + s`
    Shift { col: usize, lo: f64 },
    /// `x = hi - s`
    Mirror { col: usize, hi: f64 },
    /// `x = s+ - s-`
    Split { pos: usize, neg: usize },
}

/// `min c's` (up to a constant) subject to `A s = b`, `s >= 0`, `b >= 0`.
struct StandardForm {
    rows: usize,
    cols: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    map: Vec<VarMap>,
}

impl StandardForm {
    fn build(p: &LpProblem) -> Self {
        let n = p.num_vars();
        let mut map = Vec::with_capacity(n);
        let mut ncols = 0usize;
        let mut bound_rows = Vec::new();
        for &(lo, hi) in &p.bounds {
            if lo.is_finite() {
                map.push(VarMap::Shift { col: ncols, lo });
                if hi.is_finite() {
                    bound_rows.push((ncols, hi - lo));
                }
                ncols += 1;
            } else if hi.is_finite() {
                map.push(VarMap::Mirror { col: ncols, hi });
                ncols += 1;
            } else {
                map.push(VarMap::Split {
                    pos: ncols,
                    neg: ncols + 1,
                });
                ncols += 2;
            }
        }
        let n_eq = p.eq_rhs.len();
        let n_ub = p.ub_rhs.len();
        let n_slack = n_ub + bound_rows.len();
        let rows = n_eq + n_slack;
        let cols = ncols + n_slack;
        let mut a = vec![0.0; rows * cols];
        let mut b = vec![0.0; rows];

        let put_row = |r: usize, coeffs: ndarray::ArrayView1<f64>, rhs: f64, a: &mut [f64], b: &mut [f64]| {
            let mut rhs = rhs;
            for (j, &v) in coeffs.iter().enumerate() {
                if v == 0.0 {
                    continue;
                }
                match map[j] {
                    VarMap::Shift { col, lo } => {
                        a[r * cols + col] += v;
                        rhs -= v * lo;
                    }
                    VarMap::Mirror { col, hi } => {
                        a[r * cols + col] -= v;
                        rhs -= v * hi;
                    }
                    VarMap::Split { pos, neg } => {
                        a[r * cols + pos] += v;
                        a[r * cols + neg] -= v;
                    }
                }
            }
            b[r] = rhs;
        };
        for (i, row) in p.eq_matrix.rows().into_iter().enumerate() {
            put_row(i, row, p.eq_rhs[i], &mut a, &mut b);
        }
        for (i, row) in p.ub_matrix.rows().into_iter().enumerate() {
            let r = n_eq + i;
            put_row(r, row, p.ub_rhs[i], &mut a, &mut b);
            a[r * cols + ncols + i] = 1.0;
        }
        for (k, &(col, span)) in bound_rows.iter().enumerate() {
            let r = n_eq + n_ub + k;
            a[r * cols + col] = 1.0;
            a[r * cols + ncols + n_ub + k] = 1.0;
            b[r] = span;
        }
        for r in 0..rows {
            if b[r] < 0.0 {
                b[r] = -b[r];
                for v in &mut a[r * cols..(r + 1) * cols] {
                    *v = -*v;
                }
            }
        }
        let mut c = vec![0.0; cols];
        for (j, &cj) in p.objective.iter().enumerate() {
            match map[j] {
                VarMap::Shift { col, .. } => {
                    c[col] += cj;
                }
                VarMap::Mirror { col, .. } => {
                    c[col] -= cj;
                }
                VarMap::Split { pos, neg } => {
                    c[pos] += cj;
                    c[neg] -= cj;
                }
            }
        }
        StandardForm {
            rows,
            cols,
            a,
            b,
            c,
            map,
        }
    }

    fn recover(&self, s: &[f64]) -> Vec<f64> {
        self.map
            .iter()
            .map(|m| match *m {
                VarMap::Shift { col, lo } => lo + s[col],
                VarMap::Mirror { col, hi } => hi - s[col],
                VarMap::Split { pos, neg } => s[pos] - s[neg],
            })
            .collect()
    }

    /// Column `j` of `[A | I_art]` where artificial `k` is a unit column on
    /// `art_rows[k]`.
    fn column(&self, j: usize, art_rows: &[usize]) -> Vec<f64> {
        if j < self.cols {
            (0..self.rows).map(|r| self.a[r * self.cols + j]).collect()
        } else {
            let mut e = vec![0.0; self.rows];
            e[art_rows[j - self.cols]] = 1.0;
            e
        }
    }
}

enum Outcome {
    Optimal,
    Unbounded,
    IterationLimit,
}

struct Tableau {
    rows: usize,
    /// Total columns including artificials; the tableau row width is `ncols + 1`.
    ncols: usize,
    /// Columns `>= entering_limit` never enter the basis.
    entering_limit: usize,
    t: Vec<f64>,
    basis: Vec<usize>,
    d: Vec<f64>,
    obj: f64,
    scratch: Vec<f64>,
    nz: Vec<usize>,
}

impl Tableau {
    fn width(&self) -> usize {
        self.ncols + 1
    }

    fn rhs(&self, i: usize) -> f64 {
        self.t[i * self.width() + self.ncols]
    }

    fn set_costs(&mut self, cost: &[f64]) {
        let w = self.width();
        self.d = cost.to_vec();
        self.d.resize(self.ncols, 0.0);
        self.obj = 0.0;
        for i in 0..self.rows {
            let cb = if self.basis[i] < cost.len() { cost[self.basis[i]] } else { 0.0 };
            if cb == 0.0 {
                continue;
            }
            let row = &self.t[i * w..(i + 1) * w];
            for (dj, &tij) in self.d.iter_mut().zip(row) {
                *dj -= cb * tij;
            }
            self.obj += cb * row[self.ncols];
        }
        for &bj in &self.basis {
            if bj < self.ncols {
                self.d[bj] = 0.0;
            }
        }
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width();
        let inv = 1.0 / self.t[pr * w + pc];
        self.scratch.clear();
        self.nz.clear();
        for (j, v) in self.t[pr * w..(pr + 1) * w].iter_mut().enumerate() {
            *v *= inv;
            if v.abs() < DROP_TOL {
                *v = 0.0;
            }
            self.scratch.push(*v);
            if *v != 0.0 {
                self.nz.push(j);
            }
        }
        self.t[pr * w + pc] = 1.0;
        self.scratch[pc] = 1.0;
        let dense = self.nz.len() * 3 > w;
        for i in 0..self.rows {
            if i == pr {
                continue;
            }
            let row = &mut self.t[i * w..(i + 1) * w];
            let f = row[pc];
            if f == 0.0 {
                continue;
            }
            if dense {
                for (v, &p) in row.iter_mut().zip(&self.scratch) {
                    *v -= f * p;
                }
            } else {
                for &j in &self.nz {
                    row[j] -= f * self.scratch[j];
                }
            }
            row[pc] = 0.0;
            let rhs = &mut row[w - 1];
            if *rhs < 0.0 && *rhs > -PIVOT_TOL {
                *rhs = 0.0;
            }
        }
        let f = self.d[pc];
        if f != 0.0 {
            for &j in &self.nz {
                if j < self.ncols {
                    self.d[j] -= f * self.scratch[j];
                }
            }
            self.obj += f * self.scratch[self.ncols];
        }
        self.d[pc] = 0.0;
        self.basis[pr] = pc;
    }

    fn run(&mut self, opt_tol: f64, iters: &mut usize, max_iter: usize) -> Outcome {
        let mut degenerate = 0usize;
        let mut bland = false;
        loop {
            let entering = if bland {
                (0..self.entering_limit).find(|&j| self.d[j] < -opt_tol)
            } else {
                let mut best: Option<(usize, f64)> = None;
                for j in 0..self.entering_limit {
                    let dj = self.d[j];
                    if dj < -opt_tol && best.is_none_or(|(_, b)| dj < b) {
                        best = Some((j, dj));
                    }
                }
                best.map(|(j, _)| j)
            };
            let Some(q) = entering else {
                return Outcome::Optimal;
            };
            if *iters >= max_iter {
                return Outcome::IterationLimit;
            }
            let w = self.width();
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                let a = self.t[i * w + q];
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.rhs(i).max(0.0) / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((k, best)) => {
                        let tie = (ratio - best).abs() <= 1e-12 * (1.0 + best.abs());
                        if ratio < best && !tie || tie && self.basis[i] < self.basis[k] {
                            Some((i, ratio))
                        } else {
                            Some((k, best))
                        }
                    }
                };
            }
            let Some((pr, ratio)) = leave else {
                return Outcome::Unbounded;
            };
            if ratio <= 1e-12 {
                degenerate += 1;
                if degenerate > DEGENERATE_RUN {
                    bland = true;
                }
            } else {
                degenerate = 0;
                bland = false;
            }
            self.pivot(pr, q);
            *iters += 1;
        }
    }

    fn values(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.ncols];
        for (i, &bj) in self.basis.iter().enumerate() {
            x[bj] = self.rhs(i).max(0.0);
        }
        x
    }
}

/// Solve an LP. Infeasible and unbounded problems are reported through the
/// status, never as errors; `Err` is reserved for malformed input.
pub fn solve_lp(p: &LpProblem, tol: f64, max_iter: usize) -> Result<SolverSolution> {
    p.validate()?;
    if !(tol > 0.0) {
        return invalid("tolerance must be positive");
    }
    let sf = StandardForm::build(p);
    let (rows, cols) = (sf.rows, sf.cols);

    // Crash basis from singleton columns.
    let mut nnz = vec![0usize; cols];
    for r in 0..rows {
        for j in 0..cols {
            if sf.a[r * cols + j] != 0.0 {
                nnz[j] += 1;
            }
        }
    }
    let mut basis = vec![usize::MAX; rows];
    let mut art_rows = Vec::new();
    for (r, slot) in basis.iter_mut().enumerate() {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..cols {
            let v = sf.a[r * cols + j];
            if nnz[j] == 1 && v > 0.0 {
                let score = sf.c[j] / v;
                if best.is_none_or(|(_, s)| score < s) {
                    best = Some((j, score));
                }
            }
        }
        match best {
            Some((j, _)) => *slot = j,
            None => {
                *slot = cols + art_rows.len();
                art_rows.push(r);
            }
        }
    }
    let ncols = cols + art_rows.len();
    let w = ncols + 1;
    let mut t = vec![0.0; rows * w];
    for r in 0..rows {
        t[r * w..r * w + cols].copy_from_slice(&sf.a[r * cols..(r + 1) * cols]);
        t[r * w + ncols] = sf.b[r];
    }
    for (k, &r) in art_rows.iter().enumerate() {
        t[r * w + cols + k] = 1.0;
    }
    for r in 0..rows {
        let piv = t[r * w + basis[r]];
        if piv != 1.0 {
            for v in &mut t[r * w..(r + 1) * w] {
                *v /= piv;
            }
        }
    }
    let mut tab = Tableau {
        rows,
        ncols,
        entering_limit: ncols,
        t,
        basis,
        d: vec![],
        obj: 0.0,
        scratch: Vec::with_capacity(w),
        nz: Vec::with_capacity(w),
    };

    let b_scale = 1.0 + sf.b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let c_scale = 1.0 + sf.c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut iters = 0usize;

    if !art_rows.is_empty() {
        let mut phase1 = vec![0.0; ncols];
        for v in &mut phase1[cols..] {
            *v = 1.0;
        }
        tab.set_costs(&phase1);
        let outcome = tab.run(0.1 * tol, &mut iters, max_iter);
        if let Outcome::IterationLimit = outcome {
            return Ok(finish(p, &sf, &tab.values(), SolverStatus::IterationLimit, iters, None, tol));
        }
        if tab.obj > tol * b_scale {
            return Ok(finish(p, &sf, &tab.values(), SolverStatus::Infeasible, iters, None, tol));
        }
        // Drive zero-valued artificials out of the basis where possible.
        for r in 0..rows {
            if tab.basis[r] < cols {
                continue;
            }
            let row = &tab.t[r * w..r * w + cols];
            // Basic columns are zero outside their own row, so any nonzero
            // entry here belongs to a nonbasic column.
            if let Some(j) = (0..cols).find(|&j| row[j].abs() > PIVOT_TOL) {
                tab.pivot(r, j);
            }
        }
    }

    tab.entering_limit = cols;
    tab.set_costs(&sf.c);
    let opt_tol = 0.1 * tol * c_scale;
    let feas_tol = 0.1 * tol * b_scale;
    let mut refactors = 0usize;
    loop {
        match tab.run(opt_tol, &mut iters, max_iter) {
            Outcome::Unbounded => {
                return Ok(finish(p, &sf, &tab.values(), SolverStatus::Unbounded, iters, None, tol));
            }
            Outcome::IterationLimit => {
                return Ok(finish(p, &sf, &tab.values(), SolverStatus::IterationLimit, iters, None, tol));
            }
            Outcome::Optimal => {}
        }
        match polish(&sf, &tab.basis, &art_rows) {
            Polish::Done(pol) => {
                let worst = pol.reduced.iter().take(cols).fold(0.0f64, |m, &d| m.min(d));
                if worst < -opt_tol && refactors < MAX_REFACTOR {
                    refactors += 1;
                    rebuild(&mut tab, &sf, &art_rows, &pol.lu);
                    tab.set_costs(&sf.c);
                    dual_repair(&mut tab, feas_tol, &mut iters, max_iter);
                    continue;
                }
                return Ok(finish(p, &sf, &pol.x, SolverStatus::Optimal, iters, Some(&pol.reduced), tol));
            }
            // Accumulated rounding left the final basis slightly primal
            // infeasible; refactor and restore feasibility by dual pivots.
            Polish::Infeasible(lu) if refactors < MAX_REFACTOR => {
                refactors += 1;
                rebuild(&mut tab, &sf, &art_rows, &lu);
                tab.set_costs(&sf.c);
                dual_repair(&mut tab, feas_tol, &mut iters, max_iter);
            }
            Polish::Infeasible(_) | Polish::Singular => {
                let d = tab.d[..cols].to_vec();
                return Ok(finish(p, &sf, &tab.values(), SolverStatus::Optimal, iters, Some(&d), tol));
            }
        }
    }
}

enum Polish {
    Done(Polished),
    Infeasible(LuFactors),
    Singular,
}

struct Polished {
    x: Vec<f64>,
    reduced: Vec<f64>,
    lu: LuFactors,
}

fn polish(sf: &StandardForm, basis: &[usize], art_rows: &[usize]) -> Polish {
    let m = sf.rows;
    if m == 0 {
        return match LuFactors::factor_vec(0, vec![]) {
            Ok(lu) => Polish::Done(Polished {
                x: vec![0.0; sf.cols],
                reduced: sf.c.clone(),
                lu,
            }),
            Err(_) => Polish::Singular,
        };
    }
    let mut bmat = vec![0.0; m * m];
    for (k, &j) in basis.iter().enumerate() {
        for (r, v) in sf.column(j, art_rows).into_iter().enumerate() {
            bmat[r * m + k] = v;
        }
    }
    let Ok(lu) = LuFactors::factor_vec(m, bmat) else {
        return Polish::Singular;
    };
    let xb = lu.solve(&sf.b);
    if xb.iter().any(|v| !v.is_finite()) {
        return Polish::Singular;
    }
    let feas = 1e-9 * (1.0 + sf.b.iter().fold(0.0f64, |a, v| a.max(v.abs())));
    if xb.iter().any(|v| *v < -feas) {
        return Polish::Infeasible(lu);
    }
    let cb: Vec<f64> = basis.iter().map(|&j| if j < sf.cols { sf.c[j] } else { 0.0 }).collect();
    let pi = lu.solve_transpose(&cb);
    let mut x = vec![0.0; sf.cols];
    for (k, &j) in basis.iter().enumerate() {
        if j < sf.cols {
            x[j] = xb[k].max(0.0);
        }
    }
    let mut reduced = sf.c.clone();
    for r in 0..m {
        let pr = pi[r];
        if pr == 0.0 {
            continue;
        }
        for (j, d) in reduced.iter_mut().enumerate() {
            *d -= pr * sf.a[r * sf.cols + j];
        }
    }
    for &j in basis {
        if j < sf.cols {
            reduced[j] = 0.0;
        }
    }
    Polish::Done(Polished { x, reduced, lu })
}

/// Recompute the tableau `B^-1 [A | b]` from the original data.
fn rebuild(tab: &mut Tableau, sf: &StandardForm, art_rows: &[usize], lu: &LuFactors) {
    let w = tab.width();
    for j in 0..tab.ncols {
        let col = lu.solve(&sf.column(j, art_rows));
        for (r, v) in col.into_iter().enumerate() {
            tab.t[r * w + j] = if v.abs() < DROP_TOL { 0.0 } else { v };
        }
    }
    let rhs = lu.solve(&sf.b);
    for (r, v) in rhs.into_iter().enumerate() {
        tab.t[r * w + tab.ncols] = v;
    }
    for (k, &j) in tab.basis.clone().iter().enumerate() {
        for r in 0..tab.rows {
            tab.t[r * w + j] = if r == k { 1.0 } else { 0.0 };
        }
    }
}

/// Dual simplex pivots until every basic value is at least `-feas_tol`,
/// then clamp the remaining tiny negatives. Reduced costs stay
/// nonnegative, so a primal pass afterwards starts from a feasible basis.
fn dual_repair(tab: &mut Tableau, feas_tol: f64, iters: &mut usize, max_iter: usize) {
    let w = tab.width();
    loop {
        let leave = (0..tab.rows)
            .filter(|&i| tab.rhs(i) < -feas_tol)
            .min_by(|&a, &b| tab.rhs(a).total_cmp(&tab.rhs(b)).then(a.cmp(&b)));
        let Some(r) = leave else { break };
        if *iters >= max_iter {
            break;
        }
        let mut enter: Option<(usize, f64)> = None;
        for j in 0..tab.entering_limit {
            let a = tab.t[r * w + j];
            if a < -PIVOT_TOL {
                let ratio = tab.d[j].max(0.0) / -a;
                if enter.is_none_or(|(_, best)| ratio < best) {
                    enter = Some((j, ratio));
                }
            }
        }
        let Some((q, _)) = enter else { break };
        tab.pivot(r, q);
        *iters += 1;
    }
    for i in 0..tab.rows {
        let v = &mut tab.t[i * w + tab.ncols];
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

fn finish(
    p: &LpProblem,
    sf: &StandardForm,
    s: &[f64],
    status: SolverStatus,
    iterations: usize,
    reduced: Option<&[f64]>,
    tol: f64,
) -> SolverSolution {
    let x = sf.recover(&s[..sf.cols]);
    let objective_value = p.objective_at(&x);
    let rhs_scale = 1.0
        + p.eq_rhs
            .iter()
            .chain(&p.ub_rhs)
            .fold(0.0f64, |m, v| m.max(v.abs()));
    let c_scale = 1.0 + sf.c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let primal = p.primal_violation(&x) / rhs_scale;
    let (dual, complementarity) = match reduced {
        Some(reduced) => {
            let dual = -reduced.iter().fold(0.0f64, |m, &d| m.min(d)) / c_scale;
            let comp: f64 = reduced.iter().zip(s).map(|(d, x)| (d * x).abs()).sum();
            (dual, comp / (1.0 + objective_value.abs()))
        }
        None => (f64::NAN, f64::NAN),
    };
    let certificate = Certificate {
        primal,
        dual,
        complementarity,
    };
    // A basis that fails its own certificate is not reported as optimal.
    let status = if status == SolverStatus::Optimal && !certificate.within(tol) {
        SolverStatus::IterationLimit
    } else {
        status
    };
    SolverSolution {
        variables: x,
        objective_value,
        status,
        certificate,
        iterations,
    }
}
