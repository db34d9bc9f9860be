use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use svmpi::feature_select::{refit_on_selection, select_features, FeatureSelection, WeightRoute};
use svmpi::interval::{check_coverage, check_q_bar, validation_split};
use svmpi::Dataset;

use super::{finish, load_dataset, CommonArgs, CsvArgs};
use crate::output::{with_suffix, Outputs, Report};

/// Select features from linear sparse quantile fits and compare intervals
/// before and after selection.
#[derive(Debug, Clone, Args)]
pub struct FeatselArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub csv: CsvArgs,
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Test CSV; otherwise --test-frac of the data is held out.
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long)]
    pub test_frac: Option<f64>,
    #[arg(long)]
    pub coverage: Option<f64>,
    #[arg(long)]
    pub q_bar: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    /// Absolute weight threshold; default is 1e-4 of the largest weight.
    #[arg(long)]
    pub eps: Option<f64>,
    /// primal or expansion.
    #[arg(long)]
    pub route: Option<WeightRoute>,
    /// Candidate columns by header name or zero-based index (default: all).
    #[arg(long, value_delimiter = ',')]
    pub columns: Option<Vec<String>>,
    /// Output prefix: writes <out>.report.txt, .report.csv and .weights.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Resolves column selectors against the feature columns of `data`.
pub fn resolve_columns(data: &Dataset, selectors: &[String]) -> Result<Vec<usize>> {
    let n = data.n_features();
    let mut out = Vec::with_capacity(selectors.len());
    for s in selectors {
        let by_name = data.column_names.as_ref().and_then(|names| names.iter().position(|c| c == s));
        let idx = match (by_name, s.parse::<usize>()) {
            (Some(i), _) => i,
            (None, Ok(i)) if i < n => i,
            _ => bail!("unknown column {s:?} ({n} feature columns)"),
        };
        if out.contains(&idx) {
            bail!("column {s:?} selected twice");
        }
        out.push(idx);
    }
    if out.is_empty() {
        bail!("--columns selects nothing");
    }
    Ok(out)
}

fn weights_csv(w: &mut dyn std::io::Write, sel: &FeatureSelection, original: &[usize]) -> Result<()> {
    let f = svmpi::data::format_float;
    let mut c = csv::Writer::from_writer(w);
    c.write_record(["column", "name", "w_lower", "w_upper", "w_lower_raw", "w_upper_raw", "kept"])?;
    for (j, &col) in original.iter().enumerate() {
        let name = sel.column_names.as_ref().map(|n| n[j].clone()).unwrap_or_default();
        c.write_record([
            col.to_string(),
            name,
            f(sel.w_lower[j]),
            f(sel.w_upper[j]),
            f(sel.w_lower_raw[j]),
            f(sel.w_upper_raw[j]),
            sel.kept.contains(&j).to_string(),
        ])?;
    }
    c.flush()?;
    Ok(())
}

pub fn run(args: &FeatselArgs) -> Result<()> {
    let mut r = args.common.resolver()?;
    let common = args.common.resolve(&mut r)?;
    let csv = args.csv.resolve(&mut r)?;
    let data_path: PathBuf = r.require("data", args.data.clone())?;
    let test_path = r.get_opt("test", args.test.clone())?;
    let test_frac = r.get("test-frac", args.test_frac, 0.3)?;
    let coverage = r.get("coverage", args.coverage, 0.95)?;
    check_coverage(coverage)?;
    let q_bar = r.get("q-bar", args.q_bar, (1.0 - coverage) / 2.0)?;
    check_q_bar(q_bar, coverage)?;
    let c = r.get("c", args.c, 0.1)?;
    let eps = r.get_opt("eps", args.eps)?;
    let route = r.get("route", args.route, WeightRoute::Primal)?;
    let columns: Option<Vec<String>> = r.get_opt("columns", args.columns.clone())?;
    let out: PathBuf = r.require("out", args.out.clone())?;
    let resolved = r.finish()?;

    let data = load_dataset(&data_path, &csv)?;
    let (train, test) = match &test_path {
        Some(p) => (data, load_dataset(p, &csv)?),
        None => validation_split(&data, test_frac, false, common.seed)?,
    };
    let original: Vec<usize> = match &columns {
        Some(sel) => resolve_columns(&train, sel)?,
        None => (0..train.n_features()).collect(),
    };
    let train = train.select_columns(&original)?;
    let test = test.select_columns(&original)?;

    let sel = select_features(&train, coverage, q_bar, eps, c, route, &common.opts).context("feature selection")?;
    if sel.kept.is_empty() {
        eprintln!("warning: no features kept at eps = {}; the refit is a constant interval", sel.eps);
    }
    let cmp = refit_on_selection(&train, &test, &sel, coverage, q_bar, c, &common.opts).context("refit on selected features")?;

    let mut rep = Report::new("featsel", common.timing);
    rep.push_config(&resolved);
    rep.push("data.train_rows", train.len());
    rep.push("data.test_rows", test.len());
    rep.push("selection.candidates", original.len());
    rep.push("selection.kept", sel.kept.len());
    rep.push("selection.dropped", sel.dropped.len());
    rep.push_f64("selection.reduced_features_pct", sel.pct_reduced());
    rep.push_f64("selection.eps", sel.eps);
    rep.push("selection.route", sel.route);
    let kept_names: Vec<String> = sel
        .kept
        .iter()
        .map(|&j| match &sel.column_names {
            Some(n) => n[j].clone(),
            None => original[j].to_string(),
        })
        .collect();
    rep.push("selection.kept_columns", kept_names.join(" "));
    rep.push_experiment("before", &cmp.before);
    rep.push_experiment("after", &cmp.after);

    let mut outputs = Outputs::new();
    outputs.add_with(with_suffix(&out, ".weights.csv"), |w| weights_csv(w, &sel, &original))?;
    finish(&rep, &out, outputs)
}
