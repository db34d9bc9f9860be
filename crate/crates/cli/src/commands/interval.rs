use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use svmpi::interval::{
    default_power_grid, default_qbar_grid, grid_search, quantile_levels, tune_qbar, validation_split, GridSearchResult, IntervalFit,
};
use svmpi::metrics::ExperimentReport;
use svmpi::{Dataset, FitOptions};

use super::{check_positive_grid, finish, load_dataset, CommonArgs, CsvArgs, Model, ModelArgs};
use crate::config::Resolver;
use crate::output::{bounds_csv, parent_dir, with_suffix, Outputs, Report};

/// Tune and fit a prediction interval, then report it on validation and
/// (optionally) test data.
#[derive(Debug, Clone, Args)]
pub struct IntervalArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub csv: CsvArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub split: SplitArgs,
    /// q_bar values tried when --q-bar is not given.
    #[arg(long, value_delimiter = ',')]
    pub q_bar_grid: Option<Vec<f64>>,
    /// Optional test CSV, same layout as the training data.
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Output prefix: writes <out>.report.txt, .report.csv, .bounds.csv and
    /// .interval.json with its two bound models.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Training data, validation source and search grids.
#[derive(Debug, Clone, Args, Default)]
pub struct SplitArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Explicit validation CSV; otherwise --val-frac of the data is held out.
    #[arg(long)]
    pub val: Option<PathBuf>,
    #[arg(long)]
    pub val_frac: Option<f64>,
    /// Hold out the last rows instead of a seeded random subset.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", action = clap::ArgAction::Set)]
    pub chronological: Option<bool>,
    #[arg(long, value_delimiter = ',')]
    pub c_grid: Option<Vec<f64>>,
    /// RBF widths (ignored by the linear kernel).
    #[arg(long, value_delimiter = ',')]
    pub width_grid: Option<Vec<f64>>,
}

pub struct Split {
    pub data: PathBuf,
    pub val: Option<PathBuf>,
    pub val_frac: f64,
    pub chronological: bool,
    pub c_grid: Vec<f64>,
    pub width_grid: Vec<f64>,
}

impl SplitArgs {
    pub fn resolve(&self, r: &mut Resolver) -> Result<Split> {
        let data = r.require("data", self.data.clone())?;
        let val = r.get_opt("val", self.val.clone())?;
        let val_frac = r.get("val-frac", self.val_frac, 0.1)?;
        let chronological = r.get("chronological", self.chronological, false)?;
        let c_grid = r.get("c-grid", self.c_grid.clone(), default_power_grid())?;
        let width_grid = r.get("width-grid", self.width_grid.clone(), default_power_grid())?;
        check_positive_grid("c-grid", &c_grid)?;
        check_positive_grid("width-grid", &width_grid)?;
        Ok(Split {
            data,
            val,
            val_frac,
            chronological,
            c_grid,
            width_grid,
        })
    }
}

impl Split {
    /// `(train, validation)` per the resolved split settings.
    pub fn load(&self, csv: &svmpi::data::CsvOptions, seed: u64) -> Result<(Dataset, Dataset)> {
        let data = load_dataset(&self.data, csv)?;
        match &self.val {
            Some(p) => Ok((data, load_dataset(p, csv)?)),
            None => Ok(validation_split(&data, self.val_frac, self.chronological, seed)?),
        }
    }
}

pub struct Tuned {
    pub grid: GridSearchResult,
    pub q_bar: f64,
    pub fit: IntervalFit,
    pub validation: ExperimentReport,
    pub q_bar_tuned: bool,
}

/// Grid search over C and width at a starting q_bar, then, for quantile
/// methods without a fixed q_bar, a q_bar sweep at the chosen C and width.
pub fn tune(train: &Dataset, val: &Dataset, model: &Model, split: &Split, q_grid: &[f64], opts: &FitOptions) -> Result<Tuned> {
    let q0 = model.q_bar.unwrap_or_else(|| model.symmetric_q_bar());
    let grid = grid_search(train, val, &model.spec(q0, 1.0, 1.0), &split.c_grid, &split.width_grid, opts).context("grid search")?;
    if model.q_bar.is_none() && model.method.uses_q_bar() {
        let choice = tune_qbar(train, val, q_grid, &model.spec(q0, grid.c, grid.width), opts).context("q_bar search")?;
        return Ok(Tuned {
            q_bar: choice.q_bar,
            fit: choice.fit,
            validation: choice.validation,
            grid,
            q_bar_tuned: true,
        });
    }
    Ok(Tuned {
        q_bar: q0,
        fit: grid.fit.clone(),
        validation: grid.validation.clone(),
        grid,
        q_bar_tuned: false,
    })
}

pub fn run(args: &IntervalArgs) -> Result<()> {
    let mut r = args.common.resolver()?;
    let common = args.common.resolve(&mut r)?;
    let csv = args.csv.resolve(&mut r)?;
    let model = args.model.resolve(&mut r, svmpi::interval::Method::Ssvqr, 0.95, common.seed)?;
    let split = args.split.resolve(&mut r)?;
    let q_grid = r.get("q-bar-grid", args.q_bar_grid.clone(), default_qbar_grid(model.coverage))?;
    if model.q_bar.is_none() && model.method.uses_q_bar() {
        for &q in &q_grid {
            svmpi::interval::check_q_bar(q, model.coverage)?;
        }
    }
    let test_path = r.get_opt("test", args.test.clone())?;
    let out: PathBuf = r.require("out", args.out.clone())?;
    let resolved = r.finish()?;

    let (train, val) = split.load(&csv, common.seed)?;
    let test = test_path.as_ref().map(|p| load_dataset(p, &csv)).transpose()?;
    let tuned = tune(&train, &val, &model, &split, &q_grid, &common.opts)?;
    let interval = &tuned.fit.interval;
    let (lo_level, hi_level) = quantile_levels(model.coverage, tuned.q_bar)?;

    let mut rep = Report::new("interval", common.timing);
    rep.push_config(&resolved);
    rep.push("data.train_rows", train.len());
    rep.push("data.validation_rows", val.len());
    rep.push("data.test_rows", test.as_ref().map_or("NA".to_owned(), |t| t.len().to_string()));
    rep.push("data.features", train.n_features());
    rep.push("selected.method", model.method);
    rep.push_f64("selected.c", tuned.grid.c);
    rep.push_f64("selected.width", tuned.grid.width);
    rep.push_f64("selected.q_bar", tuned.q_bar);
    rep.push("selected.q_bar_tuned", tuned.q_bar_tuned);
    if model.method.uses_q_bar() {
        rep.push_f64("selected.lower_level", lo_level);
        rep.push_f64("selected.upper_level", hi_level);
    }
    rep.push("grid.candidates", tuned.grid.points.len());
    rep.push("grid.failed", tuned.grid.points.iter().filter(|p| p.error.is_some()).count());
    let mut validation = tuned.validation.clone();
    validation.train_seconds = tuned.fit.train_seconds;
    rep.push_experiment("validation", &validation);
    let shown = match &test {
        Some(t) => {
            let mut tr = interval.evaluate_with(common.opts.exec, t)?;
            tr.train_seconds = tuned.fit.train_seconds;
            rep.push_experiment("test", &tr);
            t
        }
        None => &val,
    };
    rep.push("bounds.source", if test.is_some() { "test" } else { "validation" });

    let (lo, hi) = interval.bounds(shown.inputs.view())?;
    let y = shown.targets.to_vec();
    let mut outputs = Outputs::new();
    outputs.add_with(with_suffix(&out, ".bounds.csv"), |w| bounds_csv(w, &y, &lo, &hi))?;
    let header = with_suffix(&out, ".interval.json");
    let name = header.file_name().context("--out needs a file name")?.to_owned();
    outputs.add_saved(parent_dir(&header), |dir| Ok(interval.save(dir.join(&name))?))?;
    finish(&rep, &out, outputs)
}
