use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use svmpi::forecast::{forecast_pi, read_series, write_points_to, ForecastConfig, LagScore, DEFAULT_LAGS};
use svmpi::interval::{default_power_grid, Method};
use svmpi::metrics::REPORT_FIELDS;
use svmpi::KernelSpec;

use super::{check_positive_grid, finish, CommonArgs, ModelArgs};
use crate::output::{with_suffix, Outputs, Report};

/// One-step-ahead interval forecasts for a univariate series.
#[derive(Debug, Clone, Args)]
pub struct ForecastArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Series CSV: one value column, or timestamp and value with --timestamp.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true", action = clap::ArgAction::Set)]
    pub no_header: Option<bool>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true", action = clap::ArgAction::Set)]
    pub timestamp: Option<bool>,
    #[arg(long, value_delimiter = ',')]
    pub lags: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub c_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub width_grid: Option<Vec<f64>>,
    /// Share of the series used for training plus validation.
    #[arg(long)]
    pub train_frac: Option<f64>,
    /// Share of that part, at its end, used for validation.
    #[arg(long)]
    pub val_frac: Option<f64>,
    /// Refit the tuned model on training plus validation data.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", action = clap::ArgAction::Set)]
    pub refit: Option<bool>,
    /// Output prefix: writes <out>.report.txt, .report.csv, .points.csv and
    /// .lags.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn lags_csv(w: &mut dyn std::io::Write, scores: &[LagScore]) -> Result<()> {
    let f = svmpi::data::format_float;
    let mut c = csv::Writer::from_writer(w);
    let mut header = vec!["lag", "c", "width"];
    header.extend(REPORT_FIELDS.iter().map(|k| *k));
    header.push("error");
    c.write_record(&header)?;
    for s in scores {
        let mut row = vec![s.lag.to_string(), f(s.c), f(s.width)];
        match &s.validation {
            Some(v) => row.extend(v.fields().into_iter().map(|(_, v)| v)),
            None => row.extend(REPORT_FIELDS.iter().map(|_| "NA".to_owned())),
        }
        row.push(s.error.clone().unwrap_or_default());
        c.write_record(&row)?;
    }
    c.flush()?;
    Ok(())
}

pub fn run(args: &ForecastArgs) -> Result<()> {
    let mut r = args.common.resolver()?;
    let common = args.common.resolve(&mut r)?;
    let model = args.model.resolve(&mut r, Method::Ssvqr, 0.95, common.seed)?;
    let data_path: PathBuf = r.require("data", args.data.clone())?;
    let no_header = r.get("no-header", args.no_header, false)?;
    let timestamp = r.get("timestamp", args.timestamp, false)?;
    let lags = r.get("lags", args.lags.clone(), DEFAULT_LAGS.to_vec())?;
    let c_grid = r.get("c-grid", args.c_grid.clone(), default_power_grid())?;
    let width_grid = r.get("width-grid", args.width_grid.clone(), default_power_grid())?;
    check_positive_grid("c-grid", &c_grid)?;
    check_positive_grid("width-grid", &width_grid)?;
    let train_frac = r.get("train-frac", args.train_frac, 0.7)?;
    let val_frac = r.get("val-frac", args.val_frac, 0.1)?;
    let refit = r.get("refit", args.refit, true)?;
    let out: PathBuf = r.require("out", args.out.clone())?;
    let resolved = r.finish()?;

    let series = read_series(&data_path, !no_header, timestamp).with_context(|| format!("reading series {}", data_path.display()))?;
    let cfg = ForecastConfig {
        method: model.method,
        coverage_target: model.coverage,
        q_bar: model.q_bar.unwrap_or_else(|| model.symmetric_q_bar()),
        lags,
        c_grid,
        width_grid,
        kernel: KernelSpec {
            family: model.kernel,
            width: 1.0,
        },
        tube: model.tube,
        train_frac,
        val_frac,
        refit,
    };
    let res = forecast_pi(&series, &cfg, &common.opts).context("forecasting")?;

    let mut rep = Report::new("forecast", common.timing);
    rep.push_config(&resolved);
    rep.push("series.length", series.len());
    rep.push("split.train", res.split.train.len());
    rep.push("split.validation", res.split.val.len());
    rep.push("split.test", res.split.test.len());
    rep.push_f64("scaling.min", res.scaling.min);
    rep.push_f64("scaling.span", res.scaling.span);
    rep.push("selected.lag", res.lag);
    rep.push_f64("selected.c", res.c);
    rep.push_f64("selected.width", res.width);
    rep.push_f64("selected.q_bar", cfg.q_bar);
    rep.push_experiment("test", &res.report);
    rep.push_f64("test.mpiw_scaled", res.mpiw_scaled);

    let mut outputs = Outputs::new();
    outputs.add_with(with_suffix(&out, ".points.csv"), |w| Ok(write_points_to(w, &res.points)?))?;
    outputs.add_with(with_suffix(&out, ".lags.csv"), |w| lags_csv(w, &res.lag_scores))?;
    finish(&rep, &out, outputs)
}
