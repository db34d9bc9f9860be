//! Tube-loss kernel interval model trained by subgradient descent.
//!
//! Two expansions `lower = K alpha + b1` and `upper = K beta + b2` are fitted
//! jointly by minimizing
//! `lambda/2 (a'a + b'b) + sum tube_loss(y - upper, y - lower) + delta sum |lower - upper|`.
//! The problem is non-convex in general, so the result depends on the start.

use std::time::Instant;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{check_fit_inputs, gram_times, training_gram, FitOptions, KernelModel};
use crate::data::Dataset;
use crate::error::{check_dim, invalid, Error, Result};
use crate::kernel::KernelSpec;
use crate::loss::{tube_branch, tube_loss_unchecked, TubeBranch, TubeParams};
use crate::stats::empirical_quantile;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TubeConfig {
    /// Initial step length; epoch `t` uses `step / sqrt(t)` along the
    /// normalized subgradient.
    pub step: f64,
    pub max_epochs: usize,
    pub seed: u64,
    /// Standard deviation of the random coefficient start (0 = all zero).
    pub init_jitter: f64,
}

impl Default for TubeConfig {
    fn default() -> Self {
        TubeConfig {
            step: 0.5,
            max_epochs: 2000,
            seed: 0,
            init_jitter: 0.0,
        }
    }
}

impl TubeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return invalid(format!("step must be positive, got {}", self.step));
        }
        if self.max_epochs == 0 {
            return invalid("max_epochs must be positive");
        }
        if !(self.init_jitter >= 0.0 && self.init_jitter.is_finite()) {
            return invalid("init_jitter must be nonnegative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TubeFitReport {
    pub lower: KernelModel,
    pub upper: KernelModel,
    pub objective_value: f64,
    pub initial_objective: f64,
    /// Best objective seen after each epoch, starting with the initial value.
    pub trace: Vec<f64>,
    pub train_seconds: f64,
    pub seed: u64,
    pub init_jitter: f64,
    pub sparsity_lower_pct: f64,
    pub sparsity_upper_pct: f64,
}

/// The training objective over `theta = [alpha (m), beta (m), b1, b2]`.
#[derive(Debug, Clone)]
pub struct TubeObjective<'a> {
    gram: &'a Array2<f64>,
    y: &'a [f64],
    params: TubeParams,
}

impl<'a> TubeObjective<'a> {
    pub fn new(gram: &'a Array2<f64>, y: &'a [f64], params: TubeParams) -> Result<Self> {
        params.validate()?;
        check_dim(y.len(), gram.nrows())?;
        check_dim(y.len(), gram.ncols())?;
        Ok(TubeObjective { gram, y, params })
    }

    pub fn dim(&self) -> usize {
        2 * self.y.len() + 2
    }

    /// Lower and upper bound values at the training points.
    pub fn bounds_at(&self, theta: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let m = self.y.len();
        let mut lo = gram_times(self.gram, &theta[..m]);
        let mut up = gram_times(self.gram, &theta[m..2 * m]);
        lo.iter_mut().for_each(|v| *v += theta[2 * m]);
        up.iter_mut().for_each(|v| *v += theta[2 * m + 1]);
        (lo, up)
    }

    pub fn value(&self, theta: &[f64]) -> f64 {
        let m = self.y.len();
        let (lo, up) = self.bounds_at(theta);
        let p = &self.params;
        let reg: f64 = theta[..2 * m].iter().map(|v| v * v).sum();
        let mut total = 0.5 * p.lambda * reg;
        for i in 0..m {
            // A crossed pair is scored with its bounds in sorted order.
            let (hi, low) = if up[i] >= lo[i] { (up[i], lo[i]) } else { (lo[i], up[i]) };
            total += tube_loss_unchecked(p.coverage_target, p.r, self.y[i] - hi, self.y[i] - low);
            total += p.delta * (lo[i] - up[i]).abs();
        }
        total
    }

    pub fn subgradient(&self, theta: &[f64]) -> Vec<f64> {
        let m = self.y.len();
        let (lo, up) = self.bounds_at(theta);
        let p = &self.params;
        let cov = p.coverage_target;
        let a = p.alpha();
        let mut g_lo = vec![0.0; m];
        let mut g_up = vec![0.0; m];
        for i in 0..m {
            let up_is_hi = up[i] >= lo[i];
            let (hi, low) = if up_is_hi { (up[i], lo[i]) } else { (lo[i], up[i]) };
            let (u2, u1) = (self.y[i] - hi, self.y[i] - low);
            let (d_hi, d_low) = match tube_branch(p.r, u2, u1) {
                TubeBranch::Above => (-cov, 0.0),
                TubeBranch::InsideUpper => (a, 0.0),
                TubeBranch::InsideLower => (0.0, -a),
                TubeBranch::Below => (0.0, cov),
            };
            if up_is_hi {
                g_up[i] += d_hi;
                g_lo[i] += d_low;
            } else {
                g_lo[i] += d_hi;
                g_up[i] += d_low;
            }
            let s = sign(lo[i] - up[i]);
            g_lo[i] += p.delta * s;
            g_up[i] -= p.delta * s;
        }
        let mut g = Vec::with_capacity(self.dim());
        g.extend(gram_times(self.gram, &g_lo).iter().zip(&theta[..m]).map(|(k, v)| k + p.lambda * v));
        g.extend(gram_times(self.gram, &g_up).iter().zip(&theta[m..2 * m]).map(|(k, v)| k + p.lambda * v));
        g.push(g_lo.iter().sum());
        g.push(g_up.iter().sum());
        g
    }

    /// Distance to the nearest kink of the piecewise-linear terms; the
    /// objective is differentiable at `theta` when this is positive.
    pub fn kink_distance(&self, theta: &[f64]) -> f64 {
        let (lo, up) = self.bounds_at(theta);
        let r = self.params.r;
        let mut d = f64::INFINITY;
        for i in 0..self.y.len() {
            let (hi, low) = if up[i] >= lo[i] { (up[i], lo[i]) } else { (lo[i], up[i]) };
            let (u2, u1) = (self.y[i] - hi, self.y[i] - low);
            d = d.min(u2.abs()).min(u1.abs()).min((r * u2 + (1.0 - r) * u1).abs());
            if self.params.delta > 0.0 {
                d = d.min((hi - low).abs());
            }
        }
        d
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub fn fit_tube(
    data: &Dataset,
    params: &TubeParams,
    kernel: &KernelSpec,
    cfg: &TubeConfig,
    opts: &FitOptions,
) -> Result<TubeFitReport> {
    check_fit_inputs(data, 1.0, kernel)?;
    params.validate()?;
    cfg.validate()?;
    let start = Instant::now();
    let m = data.len();
    let gram = training_gram(data, kernel, opts.exec)?;
    let y = data.targets.as_slice().expect("contiguous targets");
    let obj = TubeObjective::new(&gram, y, *params)?;

    let alpha = params.alpha();
    let mut theta = vec![0.0; obj.dim()];
    if cfg.init_jitter > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let normal = Normal::new(0.0, cfg.init_jitter).expect("valid deviation");
        theta[..2 * m].iter_mut().for_each(|v| *v = normal.sample(&mut rng));
    }
    theta[2 * m] = empirical_quantile(y, alpha / 2.0)?;
    theta[2 * m + 1] = empirical_quantile(y, 1.0 - alpha / 2.0)?;

    let initial = obj.value(&theta);
    if !initial.is_finite() {
        return Err(Error::NonFinite(format!("tube objective at the initial point is {initial}")));
    }
    let mut best = initial;
    let mut best_theta = theta.clone();
    let mut trace = Vec::with_capacity(cfg.max_epochs + 1);
    trace.push(best);
    for epoch in 1..=cfg.max_epochs {
        let g = obj.subgradient(&theta);
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        let eta = cfg.step / (epoch as f64).sqrt() / norm;
        theta.iter_mut().zip(&g).for_each(|(t, g)| *t -= eta * g);
        let value = obj.value(&theta);
        if !value.is_finite() {
            return Err(Error::NonFinite(format!(
                "tube objective became {value} at epoch {epoch} (step {eta:.3e}, gradient norm {norm:.3e})"
            )));
        }
        if value < best {
            best = value;
            best_theta.copy_from_slice(&theta);
        }
        trace.push(best);
    }

    let lower = KernelModel::new(data.inputs.clone(), best_theta[..m].to_vec(), best_theta[2 * m], *kernel)?;
    let upper = KernelModel::new(data.inputs.clone(), best_theta[m..2 * m].to_vec(), best_theta[2 * m + 1], *kernel)?;
    Ok(TubeFitReport {
        sparsity_lower_pct: lower.default_sparsity(),
        sparsity_upper_pct: upper.default_sparsity(),
        lower,
        upper,
        objective_value: best,
        initial_objective: initial,
        trace,
        train_seconds: start.elapsed().as_secs_f64(),
        seed: cfg.seed,
        init_jitter: cfg.init_jitter,
    })
}
