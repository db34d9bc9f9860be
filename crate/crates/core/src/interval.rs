//! Prediction intervals from quantile pairs, the normal-noise LS-SVR band and
//! the Tube-loss pair, plus q-bar and hyperparameter search.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ndarray::ArrayView2;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::{format_float, Dataset};
use crate::error::{check_dim, invalid, Error, Result};
use crate::kernel::{KernelFamily, KernelSpec};
use crate::loss::TubeParams;
use crate::metrics::{repair_crossing, ExperimentReport};
use crate::models::{fit_lssvr, fit_ssvqr, fit_svqr, fit_tube, FitOptions, KernelModel, TubeConfig};
use crate::par::{self, Execution};
use crate::stats::{sample_std, seeded_stream, standard_normal_quantile};

const INTERVAL_FORMAT: &str = "svmpi-interval";
const INTERVAL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Svqr,
    Ssvqr,
    Lssvr,
    Tube,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Svqr, Method::Ssvqr, Method::Lssvr, Method::Tube];

    pub fn name(self) -> &'static str {
        match self {
            Method::Svqr => "svqr",
            Method::Ssvqr => "ssvqr",
            Method::Lssvr => "lssvr",
            Method::Tube => "tube",
        }
    }

    /// Whether the method is fitted at an explicit lower quantile level.
    pub fn uses_q_bar(self) -> bool {
        matches!(self, Method::Svqr | Method::Ssvqr)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidInput(format!("unknown method {s:?} (expected svqr, ssvqr, lssvr or tube)")))
    }
}

/// Lower and upper bound models plus an additive conformal offset.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionInterval {
    pub lower: KernelModel,
    pub upper: KernelModel,
    /// 0 when absent; `+inf` marks a degenerate calibration.
    pub conformal_offset: f64,
    pub coverage_target: f64,
    /// Lower quantile level; nominal `(1 - coverage) / 2` for the methods
    /// that do not fit quantiles directly.
    pub q_bar: f64,
    pub method: Method,
}

#[derive(Serialize, Deserialize)]
struct IntervalHeader {
    format: String,
    version: u32,
    method: Method,
    coverage_target: f64,
    q_bar: f64,
    conformal_offset: String,
    lower_model: String,
    upper_model: String,
}

impl PredictionInterval {
    pub fn validate(&self) -> Result<()> {
        self.lower.validate()?;
        self.upper.validate()?;
        check_dim(self.lower.n_features(), self.upper.n_features())?;
        if self.lower.kernel.family != self.upper.kernel.family {
            return invalid("interval bounds must share a kernel family");
        }
        check_coverage(self.coverage_target)?;
        check_q_bar(self.q_bar, self.coverage_target)?;
        if !(self.conformal_offset >= 0.0) {
            return invalid("conformal offset must be nonnegative");
        }
        Ok(())
    }

    /// Raw bound values `(lower - offset, upper + offset)`, without repair.
    pub fn raw_bounds(&self, exec: Execution, xs: ArrayView2<f64>) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut lo = self.lower.predict_many_with(exec, xs)?;
        let mut hi = self.upper.predict_many_with(exec, xs)?;
        if self.conformal_offset != 0.0 {
            lo.iter_mut().for_each(|v| *v -= self.conformal_offset);
            hi.iter_mut().for_each(|v| *v += self.conformal_offset);
        }
        Ok((lo, hi))
    }

    /// Reported bounds: crossing pairs are reordered per point.
    pub fn bounds(&self, xs: ArrayView2<f64>) -> Result<(Vec<f64>, Vec<f64>)> {
        let (lo, hi) = self.raw_bounds(Execution::default(), xs)?;
        let (lo, hi, _) = repair_crossing(&lo, &hi);
        Ok((lo, hi))
    }

    pub fn evaluate(&self, data: &Dataset) -> Result<ExperimentReport> {
        self.evaluate_with(Execution::default(), data)
    }

    pub fn evaluate_with(&self, exec: Execution, data: &Dataset) -> Result<ExperimentReport> {
        let (lo, hi) = self.raw_bounds(exec, data.inputs.view())?;
        let mut r = ExperimentReport::evaluate(&lo, &hi, data.targets.as_slice().expect("contiguous"), self.coverage_target)?;
        r.sparsity_lower_pct = self.lower.default_sparsity();
        r.sparsity_upper_pct = self.upper.default_sparsity();
        Ok(r)
    }

    /// Writes a header at `path` and the bound models next to it as
    /// `<stem>.lower.json` and `<stem>.upper.json`.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
        let path = path.as_ref();
        let (lower_path, upper_path) = model_paths(path);
        let header = IntervalHeader {
            format: INTERVAL_FORMAT.to_owned(),
            version: INTERVAL_VERSION,
            method: self.method,
            coverage_target: self.coverage_target,
            q_bar: self.q_bar,
            conformal_offset: format_float(self.conformal_offset),
            lower_model: file_name(&lower_path),
            upper_model: file_name(&upper_path),
        };
        self.lower.save(&lower_path)?;
        self.upper.save(&upper_path)?;
        std::fs::write(path, serde_json::to_string_pretty(&header)?)?;
        Ok(vec![path.to_owned(), lower_path, upper_path])
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let header: IntervalHeader = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if header.format != INTERVAL_FORMAT || header.version != INTERVAL_VERSION {
            return invalid(format!("unsupported interval file ({} v{})", header.format, header.version));
        }
        let dir = path.parent().unwrap_or(Path::new("."));
        let offset: f64 = header
            .conformal_offset
            .parse()
            .map_err(|_| Error::InvalidInput(format!("bad conformal offset {:?}", header.conformal_offset)))?;
        let pi = PredictionInterval {
            lower: KernelModel::load(dir.join(&header.lower_model))?,
            upper: KernelModel::load(dir.join(&header.upper_model))?,
            conformal_offset: offset,
            coverage_target: header.coverage_target,
            q_bar: header.q_bar,
            method: header.method,
        };
        pi.validate()?;
        Ok(pi)
    }
}

fn model_paths(path: &Path) -> (PathBuf, PathBuf) {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "interval".into());
    let dir = path.parent().unwrap_or(Path::new(""));
    (dir.join(format!("{stem}.lower.json")), dir.join(format!("{stem}.upper.json")))
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

pub fn check_coverage(c: f64) -> Result<()> {
    if !(c > 0.0 && c < 1.0) {
        return invalid(format!("coverage target must lie in (0, 1), got {c}"));
    }
    Ok(())
}

pub fn check_q_bar(q_bar: f64, coverage: f64) -> Result<()> {
    if !(q_bar >= 0.0 && q_bar <= 1.0 - coverage + 1e-12) {
        return invalid(format!("q_bar must lie in [0, {}], got {q_bar}", 1.0 - coverage));
    }
    Ok(())
}

/// Quantile levels `(q_bar, q_bar + coverage)`; both must lie strictly
/// inside (0, 1) for the quantile fits.
pub fn quantile_levels(coverage_target: f64, q_bar: f64) -> Result<(f64, f64)> {
    check_coverage(coverage_target)?;
    check_q_bar(q_bar, coverage_target)?;
    let hi = q_bar + coverage_target;
    if q_bar <= 0.0 || hi >= 1.0 {
        return invalid(format!("quantile levels ({q_bar}, {hi}) must lie strictly inside (0, 1)"));
    }
    Ok((q_bar, hi))
}

/// Settings for the Tube-loss pair; `lambda` in [`TubeParams`] is derived
/// from `C` as `1 / C`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TubeSettings {
    pub r: f64,
    pub delta: f64,
    pub config: TubeConfig,
}

impl Default for TubeSettings {
    fn default() -> Self {
        TubeSettings {
            r: 0.5,
            delta: 0.0,
            config: TubeConfig::default(),
        }
    }
}

/// Everything needed to fit one interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalSpec {
    pub method: Method,
    pub coverage_target: f64,
    pub q_bar: f64,
    pub c: f64,
    pub kernel: KernelSpec,
    pub tube: TubeSettings,
}

impl IntervalSpec {
    pub fn new(method: Method, coverage_target: f64, q_bar: f64, c: f64, kernel: KernelSpec) -> Self {
        IntervalSpec {
            method,
            coverage_target,
            q_bar,
            c,
            kernel,
            tube: TubeSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalFit {
    pub interval: PredictionInterval,
    pub train_seconds: f64,
    pub sparsity_lower_pct: f64,
    pub sparsity_upper_pct: f64,
}

fn pair_fit(
    data: &Dataset,
    spec: &IntervalSpec,
    opts: &FitOptions,
    fit: impl Fn(&Dataset, f64, f64, &KernelSpec, &FitOptions) -> Result<crate::models::FitReport>,
) -> Result<IntervalFit> {
    let (q_lo, q_hi) = quantile_levels(spec.coverage_target, spec.q_bar)?;
    let lo = fit(data, q_lo, spec.c, &spec.kernel, opts)?;
    let hi = fit(data, q_hi, spec.c, &spec.kernel, opts)?;
    Ok(IntervalFit {
        train_seconds: lo.train_seconds + hi.train_seconds,
        sparsity_lower_pct: lo.sparsity_pct,
        sparsity_upper_pct: hi.sparsity_pct,
        interval: PredictionInterval {
            lower: lo.model,
            upper: hi.model,
            conformal_offset: 0.0,
            coverage_target: spec.coverage_target,
            q_bar: spec.q_bar,
            method: spec.method,
        },
    })
}

/// SVQR at levels `q_bar` and `q_bar + coverage_target`.
pub fn pi_svqr(data: &Dataset, coverage_target: f64, q_bar: f64, c: f64, kernel: &KernelSpec, opts: &FitOptions) -> Result<IntervalFit> {
    let spec = IntervalSpec::new(Method::Svqr, coverage_target, q_bar, c, *kernel);
    pair_fit(data, &spec, opts, fit_svqr)
}

/// SSVQR at levels `q_bar` and `q_bar + coverage_target`.
pub fn pi_ssvqr(data: &Dataset, coverage_target: f64, q_bar: f64, c: f64, kernel: &KernelSpec, opts: &FitOptions) -> Result<IntervalFit> {
    let spec = IntervalSpec::new(Method::Ssvqr, coverage_target, q_bar, c, *kernel);
    pair_fit(data, &spec, opts, fit_ssvqr)
}

/// LS-SVR mean shifted by the normal quantiles of the training residuals.
pub fn pi_lssvr(data: &Dataset, coverage_target: f64, c: f64, kernel: &KernelSpec, opts: &FitOptions) -> Result<IntervalFit> {
    check_coverage(coverage_target)?;
    let fit = fit_lssvr(data, c, kernel, opts)?;
    let f = fit.model.predict_many_with(opts.exec, data.inputs.view())?;
    let resid: Vec<f64> = data.targets.iter().zip(&f).map(|(y, f)| y - f).collect();
    let sigma = sample_std(&resid);
    let alpha = 1.0 - coverage_target;
    let z = standard_normal_quantile(1.0 - alpha / 2.0);
    let mut lower = fit.model.clone();
    let mut upper = fit.model;
    if sigma > 0.0 {
        lower.bias -= z * sigma;
        upper.bias += z * sigma;
    }
    Ok(IntervalFit {
        train_seconds: fit.train_seconds,
        sparsity_lower_pct: fit.sparsity_pct,
        sparsity_upper_pct: fit.sparsity_pct,
        interval: PredictionInterval {
            lower,
            upper,
            conformal_offset: 0.0,
            coverage_target,
            q_bar: alpha / 2.0,
            method: Method::Lssvr,
        },
    })
}

/// Tube-loss pair with `lambda = 1 / c`.
pub fn pi_tube(data: &Dataset, coverage_target: f64, c: f64, kernel: &KernelSpec, tube: &TubeSettings, opts: &FitOptions) -> Result<IntervalFit> {
    if !(c > 0.0 && c.is_finite()) {
        return invalid(format!("C must be positive and finite, got {c}"));
    }
    let params = TubeParams::new(coverage_target, tube.r, tube.delta, 1.0 / c)?;
    let fit = fit_tube(data, &params, kernel, &tube.config, opts)?;
    Ok(IntervalFit {
        train_seconds: fit.train_seconds,
        sparsity_lower_pct: fit.sparsity_lower_pct,
        sparsity_upper_pct: fit.sparsity_upper_pct,
        interval: PredictionInterval {
            lower: fit.lower,
            upper: fit.upper,
            conformal_offset: 0.0,
            coverage_target,
            q_bar: (1.0 - coverage_target) / 2.0,
            method: Method::Tube,
        },
    })
}

pub fn fit_interval(data: &Dataset, spec: &IntervalSpec, opts: &FitOptions) -> Result<IntervalFit> {
    match spec.method {
        Method::Svqr => pair_fit(data, spec, opts, fit_svqr),
        Method::Ssvqr => pair_fit(data, spec, opts, fit_ssvqr),
        Method::Lssvr => pi_lssvr(data, spec.coverage_target, spec.c, &spec.kernel, opts),
        Method::Tube => pi_tube(data, spec.coverage_target, spec.c, &spec.kernel, &spec.tube, opts),
    }
}

/// Result of [`tune_qbar`].
#[derive(Debug, Clone, PartialEq)]
pub struct QbarChoice {
    pub q_bar: f64,
    pub fit: IntervalFit,
    pub validation: ExperimentReport,
    /// `(q_bar, validation report)` for every grid value that fitted.
    pub evaluated: Vec<(f64, ExperimentReport)>,
}

/// Picks the grid value with the narrowest validation interval among those
/// reaching the coverage target, or else the best-covering one.
pub fn tune_qbar(data: &Dataset, val: &Dataset, grid: &[f64], spec: &IntervalSpec, opts: &FitOptions) -> Result<QbarChoice> {
    if grid.is_empty() {
        return invalid("q_bar grid is empty");
    }
    for &q in grid {
        check_q_bar(q, spec.coverage_target)?;
    }
    let results = par::map_indexed(opts.exec, grid.len(), |k| {
        let s = IntervalSpec { q_bar: grid[k], ..*spec };
        let inner = FitOptions {
            exec: Execution::Sequential,
            ..*opts
        };
        let fit = fit_interval(data, &s, &inner)?;
        let rep = fit.interval.evaluate_with(Execution::Sequential, val)?;
        Ok::<_, Error>((fit, rep))
    });
    let mut best: Option<(f64, IntervalFit, ExperimentReport)> = None;
    let mut evaluated = Vec::new();
    let mut first_err = None;
    for (k, res) in results.into_iter().enumerate() {
        match res {
            Ok((fit, rep)) => {
                evaluated.push((grid[k], rep.clone()));
                let better = match &best {
                    None => true,
                    Some((bq, _, br)) => qbar_better((grid[k], &rep), (*bq, br)),
                };
                if better {
                    best = Some((grid[k], fit, rep));
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    match best {
        Some((q_bar, fit, validation)) => Ok(QbarChoice {
            q_bar,
            fit,
            validation,
            evaluated,
        }),
        None => Err(Error::AllFitsFailed {
            count: grid.len(),
            first: first_err.map(|e| e.to_string()).unwrap_or_default(),
        }),
    }
}

fn qbar_better(a: (f64, &ExperimentReport), b: (f64, &ExperimentReport)) -> bool {
    let target = a.1.coverage_target;
    let (ok_a, ok_b) = (a.1.picp >= target, b.1.picp >= target);
    if ok_a != ok_b {
        return ok_a;
    }
    let key = |(q, r): (f64, &ExperimentReport)| {
        if ok_a {
            (0.0, r.mpiw, q)
        } else {
            (-r.picp, r.mpiw, q)
        }
    };
    lexi_less(key(a), key(b))
}

fn lexi_less(a: (f64, f64, f64), b: (f64, f64, f64)) -> bool {
    a.0.total_cmp(&b.0)
        .then(a.1.total_cmp(&b.1))
        .then(a.2.total_cmp(&b.2))
        .is_lt()
}

/// The default grid `{2^-8, ..., 2^8}` for both C and the RBF width.
pub fn default_power_grid() -> Vec<f64> {
    (-8..=8).map(|e| 2f64.powi(e)).collect()
}

/// Default q_bar grid for a 95% target, scaled for other targets.
pub fn default_qbar_grid(coverage_target: f64) -> Vec<f64> {
    let alpha = 1.0 - coverage_target;
    // Rounding drops the representation noise of 1 - coverage from reports.
    (1..=9).map(|k| (alpha * k as f64 / 10.0 * 1e12).round() / 1e12).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub c: f64,
    pub width: f64,
    pub validation: Option<ExperimentReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSearchResult {
    pub c: f64,
    pub width: f64,
    pub fit: IntervalFit,
    pub validation: ExperimentReport,
    pub points: Vec<GridPoint>,
}

/// Exhaustive search over `c_grid x width_grid` minimizing validation PICE,
/// then MPIW, then C, then width. Fits run in parallel; the selection is an
/// ordered reduction, so the result does not depend on scheduling.
pub fn grid_search(
    data: &Dataset,
    val: &Dataset,
    spec: &IntervalSpec,
    c_grid: &[f64],
    width_grid: &[f64],
    opts: &FitOptions,
) -> Result<GridSearchResult> {
    if c_grid.is_empty() || width_grid.is_empty() {
        return invalid("grid search needs nonempty C and width grids");
    }
    let widths: Vec<f64> = match spec.kernel.family {
        KernelFamily::Linear => vec![spec.kernel.width],
        KernelFamily::Rbf => width_grid.to_vec(),
    };
    let cands: Vec<(f64, f64)> = c_grid.iter().flat_map(|&c| widths.iter().map(move |&w| (c, w))).collect();
    let results = par::map_indexed(opts.exec, cands.len(), |k| {
        let (c, w) = cands[k];
        let kernel = KernelSpec { width: w, ..spec.kernel };
        let s = IntervalSpec { c, kernel, ..*spec };
        let inner = FitOptions {
            exec: Execution::Sequential,
            ..*opts
        };
        let fit = fit_interval(data, &s, &inner)?;
        let rep = fit.interval.evaluate_with(Execution::Sequential, val)?;
        Ok::<_, Error>((fit, rep))
    });
    let mut best: Option<(usize, IntervalFit, ExperimentReport)> = None;
    let mut points = Vec::with_capacity(cands.len());
    let mut first_err = None;
    for (k, res) in results.into_iter().enumerate() {
        let (c, width) = cands[k];
        match res {
            Ok((fit, rep)) => {
                points.push(GridPoint {
                    c,
                    width,
                    validation: Some(rep.clone()),
                    error: None,
                });
                let better = match &best {
                    None => true,
                    Some((bk, _, br)) => {
                        let (bc, bw) = cands[*bk];
                        (rep.pice, rep.mpiw, c, width)
                            .partial_cmp(&(br.pice, br.mpiw, bc, bw))
                            .is_some_and(|o| o.is_lt())
                    }
                };
                if better {
                    best = Some((k, fit, rep));
                }
            }
            Err(e) => {
                points.push(GridPoint {
                    c,
                    width,
                    validation: None,
                    error: Some(e.to_string()),
                });
                first_err.get_or_insert(e);
            }
        }
    }
    match best {
        Some((k, fit, validation)) => Ok(GridSearchResult {
            c: cands[k].0,
            width: cands[k].1,
            fit,
            validation,
            points,
        }),
        None => Err(Error::AllFitsFailed {
            count: cands.len(),
            first: first_err.map(|e| e.to_string()).unwrap_or_default(),
        }),
    }
}

/// Hold out a validation part: the last `frac` of rows when `chronological`,
/// otherwise a seeded random subset. Returns `(train, validation)`.
pub fn validation_split(data: &Dataset, frac: f64, chronological: bool, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(frac > 0.0 && frac < 1.0) {
        return invalid(format!("validation fraction must lie in (0, 1), got {frac}"));
    }
    let m = data.len();
    let n_val = ((frac * m as f64).round() as usize).clamp(1, m.saturating_sub(1));
    if m < 2 || n_val == 0 {
        return invalid("too few rows for a validation split");
    }
    if chronological {
        return Ok((data.slice_rows(0, m - n_val), data.slice_rows(m - n_val, m)));
    }
    let mut idx: Vec<usize> = (0..m).collect();
    idx.shuffle(&mut seeded_stream(seed, 1));
    let (val, train) = idx.split_at(n_val);
    let mut train = train.to_vec();
    let mut val = val.to_vec();
    train.sort_unstable();
    val.sort_unstable();
    Ok((data.select_rows(&train), data.select_rows(&val)))
}
