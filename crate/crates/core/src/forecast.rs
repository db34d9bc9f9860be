//! One-step-ahead interval forecasting for univariate series: lag
//! embedding, chronological splits and a tuned, teacher-forced pipeline.

use std::io::{Read, Write};
use std::ops::Range;
use std::path::Path;

use ndarray::{Array1, Array2};
use rand_distr::{Distribution, StandardNormal};

use crate::data::{format_float, Dataset};
use crate::error::{invalid, Error, Result};
use crate::interval::{check_coverage, grid_search, GridPoint, IntervalSpec, Method, PredictionInterval, TubeSettings};
use crate::kernel::KernelSpec;
use crate::metrics::{ExperimentReport, repair_crossing};
use crate::models::FitOptions;
use crate::stats::seeded_stream;

/// Lag grid used when none is given.
pub const DEFAULT_LAGS: [usize; 4] = [2, 4, 8, 12];

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub values: Vec<f64>,
    pub timestamps: Option<Vec<String>>,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let s = TimeSeries { values, timestamps: None };
        s.validate()?;
        Ok(s)
    }

    pub fn with_timestamps(values: Vec<f64>, timestamps: Vec<String>) -> Result<Self> {
        let s = TimeSeries {
            values,
            timestamps: Some(timestamps),
        };
        s.validate()?;
        Ok(s)
    }

    /// At least two finite values; timestamps, when present, match in length
    /// and strictly increase (numerically if all parse as numbers, else
    /// lexicographically).
    pub fn validate(&self) -> Result<()> {
        if self.values.len() < 2 {
            return invalid("a time series needs at least two values");
        }
        if let Some(i) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("series value at index {i}")));
        }
        if let Some(ts) = &self.timestamps {
            if ts.len() != self.values.len() {
                return invalid(format!("{} timestamps for {} values", ts.len(), self.values.len()));
            }
            let nums: Option<Vec<f64>> = ts.iter().map(|t| t.trim().parse::<f64>().ok()).collect();
            let increasing = match nums {
                Some(n) => n.windows(2).all(|w| w[0] < w[1]),
                None => ts.windows(2).all(|w| w[0] < w[1]),
            };
            if !increasing {
                return invalid("timestamps must be strictly increasing");
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Row `j` holds `(x_{j}, ..., x_{j+p-1})` and its target is `x_{j+p}`
/// (0-based series indices).
#[derive(Debug, Clone, PartialEq)]
pub struct LagDataset {
    pub windows: Array2<f64>,
    pub targets: Array1<f64>,
    pub lag: usize,
}

impl LagDataset {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// Series index of the target of row `j`.
    pub fn target_index(&self, j: usize) -> usize {
        j + self.lag
    }

    /// Rows whose targets fall in the series index range `targets`.
    pub fn rows_for_targets(&self, targets: Range<usize>) -> Range<usize> {
        let start = targets.start.max(self.lag) - self.lag;
        let end = targets.end.max(self.lag) - self.lag;
        start.min(self.len())..end.min(self.len())
    }

    pub fn to_dataset(&self, rows: Range<usize>) -> Result<Dataset> {
        let x = self.windows.slice(ndarray::s![rows.clone(), ..]).to_owned();
        let y = self.targets.slice(ndarray::s![rows]).to_owned();
        let names = (0..self.lag).map(|k| format!("lag{}", self.lag - k)).collect();
        Dataset::new(x, y)?.with_column_names(names)
    }
}

pub fn lag_embed(series: &TimeSeries, p: usize) -> Result<LagDataset> {
    let t = series.len();
    if p == 0 {
        return invalid("lag must be positive");
    }
    if p >= t {
        return invalid(format!("lag {p} needs a series longer than {t}"));
    }
    let n = t - p;
    let windows = Array2::from_shape_fn((n, p), |(j, k)| series.values[j + k]);
    let targets = Array1::from_iter(series.values[p..].iter().copied());
    Ok(LagDataset { windows, targets, lag: p })
}

/// Contiguous index ranges of the series.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ChronoSplit {
    pub train: Range<usize>,
    pub val: Range<usize>,
    pub test: Range<usize>,
}

fn floor_count(frac: f64, n: usize) -> usize {
    // The small slack keeps products like 0.7 * 100 from landing just below
    // an integer.
    (frac * n as f64 + 1e-9).floor() as usize
}

/// The first `floor(train_frac * t)` points are train plus validation, the
/// last `floor(val_frac * that)` of them being validation; the rest is test.
pub fn chrono_split(t: usize, train_frac: f64, val_frac: f64, allow_empty_val: bool) -> Result<ChronoSplit> {
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return invalid(format!("train fraction must lie in (0, 1), got {train_frac}"));
    }
    if !(0.0..1.0).contains(&val_frac) {
        return invalid(format!("validation fraction must lie in [0, 1), got {val_frac}"));
    }
    let n_tv = floor_count(train_frac, t);
    let n_val = floor_count(val_frac, n_tv);
    let split = ChronoSplit {
        train: 0..n_tv - n_val,
        val: n_tv - n_val..n_tv,
        test: n_tv..t,
    };
    if split.train.is_empty() || split.test.is_empty() {
        return invalid(format!("split of {t} points leaves an empty train or test part"));
    }
    if split.val.is_empty() && !allow_empty_val {
        return invalid(format!("split of {t} points leaves an empty validation part"));
    }
    Ok(split)
}

/// Affine map of the series onto `[0, 1]` using the fitting part only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinMax {
    pub min: f64,
    pub span: f64,
}

impl MinMax {
    pub fn fit(values: &[f64]) -> Self {
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = if max > min { max - min } else { 1.0 };
        MinMax { min, span }
    }

    pub fn scale(&self, v: f64) -> f64 {
        (v - self.min) / self.span
    }

    pub fn unscale(&self, v: f64) -> f64 {
        v * self.span + self.min
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastConfig {
    pub method: Method,
    pub coverage_target: f64,
    pub q_bar: f64,
    pub lags: Vec<usize>,
    pub c_grid: Vec<f64>,
    pub width_grid: Vec<f64>,
    pub kernel: KernelSpec,
    pub tube: TubeSettings,
    pub train_frac: f64,
    pub val_frac: f64,
    /// Refit the chosen configuration on train plus validation.
    pub refit: bool,
}

impl ForecastConfig {
    pub fn new(method: Method, coverage_target: f64) -> Self {
        ForecastConfig {
            method,
            coverage_target,
            q_bar: (1.0 - coverage_target) / 2.0,
            lags: DEFAULT_LAGS.to_vec(),
            c_grid: crate::interval::default_power_grid(),
            width_grid: crate::interval::default_power_grid(),
            kernel: KernelSpec {
                family: crate::kernel::KernelFamily::Rbf,
                width: 1.0,
            },
            tube: TubeSettings::default(),
            train_frac: 0.7,
            val_frac: 0.1,
            refit: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForecastPoint {
    pub index: usize,
    pub y_true: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Validation outcome of one lag value.
#[derive(Debug, Clone, PartialEq)]
pub struct LagScore {
    pub lag: usize,
    pub c: f64,
    pub width: f64,
    pub validation: Option<ExperimentReport>,
    pub error: Option<String>,
    pub points: Vec<GridPoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastResult {
    pub lag: usize,
    pub c: f64,
    pub width: f64,
    pub split: ChronoSplit,
    pub scaling: MinMax,
    /// Bounds on the scaled series; apply `scaling` to get data units.
    pub interval: PredictionInterval,
    pub points: Vec<ForecastPoint>,
    /// Test metrics in data units, with training time and sparsity of the
    /// final fit.
    pub report: ExperimentReport,
    /// Test MPIW on the `[0, 1]` scale.
    pub mpiw_scaled: f64,
    pub lag_scores: Vec<LagScore>,
}

/// Tunes lag, C and width on the validation tail, refits, and forecasts each
/// test point from its true preceding window.
pub fn forecast_pi(series: &TimeSeries, cfg: &ForecastConfig, opts: &FitOptions) -> Result<ForecastResult> {
    series.validate()?;
    check_coverage(cfg.coverage_target)?;
    if cfg.lags.is_empty() {
        return invalid("lag grid is empty");
    }
    let split = chrono_split(series.len(), cfg.train_frac, cfg.val_frac, false)?;
    let scaling = MinMax::fit(&series.values[..split.val.end]);
    let scaled = TimeSeries {
        values: series.values.iter().map(|&v| scaling.scale(v)).collect(),
        timestamps: None,
    };
    let spec = IntervalSpec {
        tube: cfg.tube,
        q_bar: cfg.q_bar,
        ..IntervalSpec::new(cfg.method, cfg.coverage_target, cfg.q_bar, 1.0, cfg.kernel)
    };

    let mut lag_scores = Vec::with_capacity(cfg.lags.len());
    let mut best: Option<(usize, crate::interval::GridSearchResult)> = None;
    for &p in &cfg.lags {
        let attempt = (|| {
            if p >= split.train.end {
                return invalid(format!("lag {p} leaves no training windows"));
            }
            let emb = lag_embed(&scaled, p)?;
            let train = emb.to_dataset(emb.rows_for_targets(split.train.clone()))?;
            let val = emb.to_dataset(emb.rows_for_targets(split.val.clone()))?;
            if train.len() < 2 {
                return invalid(format!("lag {p} leaves fewer than two training windows"));
            }
            grid_search(&train, &val, &spec, &cfg.c_grid, &cfg.width_grid, opts)
        })();
        match attempt {
            Ok(g) => {
                lag_scores.push(LagScore {
                    lag: p,
                    c: g.c,
                    width: g.width,
                    validation: Some(g.validation.clone()),
                    error: None,
                    points: g.points.clone(),
                });
                let better = match &best {
                    None => true,
                    Some((bp, bg)) => (g.validation.pice, g.validation.mpiw, p)
                        .partial_cmp(&(bg.validation.pice, bg.validation.mpiw, *bp))
                        .is_some_and(|o| o.is_lt()),
                };
                if better {
                    best = Some((p, g));
                }
            }
            Err(e) => lag_scores.push(LagScore {
                lag: p,
                c: f64::NAN,
                width: f64::NAN,
                validation: None,
                error: Some(e.to_string()),
                points: Vec::new(),
            }),
        }
    }
    let Some((lag, tuned)) = best else {
        return Err(Error::AllFitsFailed {
            count: cfg.lags.len(),
            first: lag_scores.iter().find_map(|s| s.error.clone()).unwrap_or_default(),
        });
    };

    let emb = lag_embed(&scaled, lag)?;
    let fit = if cfg.refit {
        let train_val = emb.to_dataset(emb.rows_for_targets(0..split.val.end))?;
        let final_spec = IntervalSpec {
            c: tuned.c,
            kernel: KernelSpec {
                width: tuned.width,
                ..cfg.kernel
            },
            ..spec
        };
        crate::interval::fit_interval(&train_val, &final_spec, opts)?
    } else {
        tuned.fit
    };

    let test = emb.to_dataset(emb.rows_for_targets(split.test.clone()))?;
    let (lo_s, hi_s) = fit.interval.raw_bounds(opts.exec, test.inputs.view())?;
    let (lo_rep, hi_rep, _) = repair_crossing(&lo_s, &hi_s);
    let mpiw_scaled = crate::metrics::mpiw(&lo_rep, &hi_rep)?;
    let lo: Vec<f64> = lo_s.iter().map(|&v| scaling.unscale(v)).collect();
    let hi: Vec<f64> = hi_s.iter().map(|&v| scaling.unscale(v)).collect();
    let y_true = &series.values[split.test.clone()];
    let mut report = ExperimentReport::evaluate(&lo, &hi, y_true, cfg.coverage_target)?;
    report.train_seconds = fit.train_seconds;
    report.sparsity_lower_pct = fit.sparsity_lower_pct;
    report.sparsity_upper_pct = fit.sparsity_upper_pct;
    let (lo, hi, _) = repair_crossing(&lo, &hi);
    let points = split
        .test
        .clone()
        .enumerate()
        .map(|(k, index)| ForecastPoint {
            index,
            y_true: y_true[k],
            lower: lo[k],
            upper: hi[k],
        })
        .collect();

    Ok(ForecastResult {
        lag,
        c: tuned.c,
        width: tuned.width,
        split,
        scaling,
        interval: fit.interval,
        points,
        report,
        mpiw_scaled,
        lag_scores,
    })
}

/// Reads a series from CSV. With `timestamp_column` the first column is a
/// label and the last column the value; otherwise the single column is the
/// value.
pub fn read_series_from<R: Read>(reader: R, has_header: bool, timestamp_column: bool) -> Result<TimeSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let want = if timestamp_column { 2 } else { 1 };
    let mut values = Vec::new();
    let mut stamps = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != want {
            return invalid(format!("row {}: expected {want} column(s), found {}", i + 1, rec.len()));
        }
        let raw = &rec[want - 1];
        let v: f64 = raw
            .parse()
            .map_err(|_| Error::InvalidInput(format!("row {}: cannot parse '{raw}' as a number", i + 1)))?;
        values.push(v);
        if timestamp_column {
            stamps.push(rec[0].to_owned());
        }
    }
    if timestamp_column {
        TimeSeries::with_timestamps(values, stamps)
    } else {
        TimeSeries::new(values)
    }
}

pub fn read_series(path: impl AsRef<Path>, has_header: bool, timestamp_column: bool) -> Result<TimeSeries> {
    read_series_from(std::fs::File::open(path)?, has_header, timestamp_column)
}

/// Writes `index,value` rows, or `timestamp,value` when labels exist.
pub fn write_series_to<W: Write>(writer: W, series: &TimeSeries) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    match &series.timestamps {
        Some(ts) => {
            w.write_record(["timestamp", "value"])?;
            for (t, v) in ts.iter().zip(&series.values) {
                w.write_record([t.clone(), format_float(*v)])?;
            }
        }
        None => {
            w.write_record(["value"])?;
            for v in &series.values {
                w.write_record([format_float(*v)])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Per-point CSV with columns `index,y_true,lower,upper`.
pub fn write_points_to<W: Write>(writer: W, points: &[ForecastPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["index", "y_true", "lower", "upper"])?;
    for p in points {
        w.write_record([p.index.to_string(), format_float(p.y_true), format_float(p.lower), format_float(p.upper)])?;
    }
    w.flush()?;
    Ok(())
}

/// `level + trend * t + amplitude * sin(2 pi t / period) + noise_sd * N(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeasonalSpec {
    pub level: f64,
    pub trend: f64,
    pub amplitude: f64,
    pub period: f64,
    pub noise_sd: f64,
}

impl Default for SeasonalSpec {
    fn default() -> Self {
        SeasonalSpec {
            level: 10.0,
            trend: 0.0,
            amplitude: 3.0,
            period: 12.0,
            noise_sd: 0.5,
        }
    }
}

pub fn seasonal_series(len: usize, spec: &SeasonalSpec, seed: u64) -> Result<TimeSeries> {
    if !(spec.period > 0.0) || !(spec.noise_sd >= 0.0) {
        return invalid("seasonal series needs a positive period and nonnegative noise");
    }
    let mut rng = seeded_stream(seed, 3);
    let values = (0..len)
        .map(|t| {
            let z: f64 = StandardNormal.sample(&mut rng);
            let tf = t as f64;
            spec.level + spec.trend * tf + spec.amplitude * (std::f64::consts::TAU * tf / spec.period).sin() + spec.noise_sd * z
        })
        .collect();
    TimeSeries::new(values)
}
