use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use svmpi::interval::{grid_search, GridPoint, Method};
use svmpi::metrics::REPORT_FIELDS;

use super::interval::SplitArgs;
use super::{finish, CommonArgs, CsvArgs, ModelArgs};
use crate::output::{with_suffix, Outputs, Report};

/// Evaluate every (C, width) pair on validation data and report the grid.
#[derive(Debug, Clone, Args)]
pub struct GridsearchArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub csv: CsvArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub split: SplitArgs,
    /// Output prefix: writes <out>.report.txt, .report.csv and .grid.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn grid_csv(w: &mut dyn std::io::Write, points: &[GridPoint]) -> Result<()> {
    let f = svmpi::data::format_float;
    let mut c = csv::Writer::from_writer(w);
    let mut header = vec!["c", "width"];
    header.extend(REPORT_FIELDS);
    header.push("error");
    c.write_record(&header)?;
    for p in points {
        let mut row = vec![f(p.c), f(p.width)];
        match &p.validation {
            Some(v) => row.extend(v.fields().into_iter().map(|(_, v)| v)),
            None => row.extend(REPORT_FIELDS.iter().map(|_| "NA".to_owned())),
        }
        row.push(p.error.clone().unwrap_or_default());
        c.write_record(&row)?;
    }
    c.flush()?;
    Ok(())
}

pub fn run(args: &GridsearchArgs) -> Result<()> {
    let mut r = args.common.resolver()?;
    let common = args.common.resolve(&mut r)?;
    let csv = args.csv.resolve(&mut r)?;
    let model = args.model.resolve(&mut r, Method::Ssvqr, 0.95, common.seed)?;
    let split = args.split.resolve(&mut r)?;
    let out: PathBuf = r.require("out", args.out.clone())?;
    let resolved = r.finish()?;

    let (train, val) = split.load(&csv, common.seed)?;
    let q_bar = model.q_bar.unwrap_or_else(|| model.symmetric_q_bar());
    let spec = model.spec(q_bar, 1.0, 1.0);
    let g = grid_search(&train, &val, &spec, &split.c_grid, &split.width_grid, &common.opts).context("grid search")?;

    let mut rep = Report::new("gridsearch", common.timing);
    rep.push_config(&resolved);
    rep.push("data.train_rows", train.len());
    rep.push("data.validation_rows", val.len());
    rep.push_f64("selected.q_bar", q_bar);
    rep.push_f64("selected.c", g.c);
    rep.push_f64("selected.width", g.width);
    rep.push("grid.candidates", g.points.len());
    rep.push("grid.failed", g.points.iter().filter(|p| p.error.is_some()).count());
    let mut best = g.validation.clone();
    best.train_seconds = g.fit.train_seconds;
    rep.push_experiment("validation", &best);

    let mut outputs = Outputs::new();
    outputs.add_with(with_suffix(&out, ".grid.csv"), |w| grid_csv(w, &g.points))?;
    finish(&rep, &out, outputs)
}
