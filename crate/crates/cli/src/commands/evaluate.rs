use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use svmpi::generators::{true_quantile_with, AdSet, NormalScale};
use svmpi::interval::{check_coverage, quantile_levels, PredictionInterval};
use svmpi::metrics::{quantile_rmse, ExperimentReport};

use super::{finish, load_dataset, CommonArgs, CsvArgs};
use crate::output::{bounds_csv, with_suffix, Outputs, Report};

/// Score a saved interval on a dataset, or score a bounds CSV directly.
#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub csv: CsvArgs,
    /// Interval header written by `interval` (<prefix>.interval.json).
    #[arg(long)]
    pub interval: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Bounds CSV with columns index,y,lower,upper (instead of --interval).
    #[arg(long)]
    pub bounds: Option<PathBuf>,
    /// Coverage target for --bounds.
    #[arg(long)]
    pub coverage: Option<f64>,
    /// Score the bounds against the true quantiles of this AD set.
    #[arg(long)]
    pub ad: Option<AdSet>,
    #[arg(long)]
    pub noise_scale: Option<NormalScale>,
    /// Output prefix: writes <out>.report.txt and .report.csv, plus
    /// .bounds.csv with --interval.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn read_bounds(path: &PathBuf) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("reading bounds {}", path.display()))?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name).with_context(|| format!("bounds CSV lacks a {name:?} column"));
    let (iy, il, iu) = (col("y")?, col("lower")?, col("upper")?);
    let (mut y, mut lo, mut hi) = (Vec::new(), Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let num = |k: usize| -> Result<f64> {
            let raw = rec.get(k).unwrap_or("").trim();
            raw.parse().with_context(|| format!("row {}: cannot parse {raw:?}", i + 1))
        };
        y.push(num(iy)?);
        lo.push(num(il)?);
        hi.push(num(iu)?);
    }
    if y.is_empty() {
        bail!("bounds CSV {} has no rows", path.display());
    }
    Ok((y, lo, hi))
}

pub fn run(args: &EvaluateArgs) -> Result<()> {
    let mut r = args.common.resolver()?;
    let common = args.common.resolve(&mut r)?;
    let csv = args.csv.resolve(&mut r)?;
    let interval_path = r.get_opt("interval", args.interval.clone())?;
    let data_path = r.get_opt("data", args.data.clone())?;
    let bounds_path = r.get_opt("bounds", args.bounds.clone())?;
    let coverage = r.get_opt("coverage", args.coverage)?;
    let ad = r.get_opt("ad", args.ad)?;
    let scale = r.get("noise-scale", args.noise_scale, NormalScale::StdDev)?;
    let out: PathBuf = r.require("out", args.out.clone())?;
    let resolved = r.finish()?;

    let mut rep = Report::new("evaluate", common.timing);
    rep.push_config(&resolved);
    let mut outputs = Outputs::new();
    match (interval_path, data_path, bounds_path) {
        (Some(ip), Some(dp), None) => {
            let pi = PredictionInterval::load(&ip).with_context(|| format!("loading interval {}", ip.display()))?;
            let data = load_dataset(&dp, &csv)?;
            let coverage = coverage.unwrap_or(pi.coverage_target);
            check_coverage(coverage)?;
            let (lo_raw, hi_raw) = pi.raw_bounds(common.opts.exec, data.inputs.view())?;
            let y = data.targets.to_vec();
            let mut er = ExperimentReport::evaluate(&lo_raw, &hi_raw, &y, coverage)?;
            er.sparsity_lower_pct = pi.lower.default_sparsity();
            er.sparsity_upper_pct = pi.upper.default_sparsity();
            if let Some(ad) = ad {
                if data.n_features() != 1 {
                    bail!("--ad needs one-feature data, found {} features", data.n_features());
                }
                let (ql, qu) = quantile_levels(pi.coverage_target, pi.q_bar)?;
                let mut tl = Vec::with_capacity(data.len());
                let mut tu = Vec::with_capacity(data.len());
                for i in 0..data.len() {
                    let x = data.row(i).to_vec();
                    tl.push(true_quantile_with(ad, ql, &x, scale)?);
                    tu.push(true_quantile_with(ad, qu, &x, scale)?);
                }
                er.rmse_lower = Some(quantile_rmse(&lo_raw, &tl)?);
                er.rmse_upper = Some(quantile_rmse(&hi_raw, &tu)?);
            }
            rep.push("interval.method", pi.method);
            rep.push_f64("interval.q_bar", pi.q_bar);
            rep.push_f64("interval.conformal_offset", pi.conformal_offset);
            rep.push("data.rows", data.len());
            rep.push_experiment("metrics", &er);
            let (lo, hi) = pi.bounds(data.inputs.view())?;
            outputs.add_with(with_suffix(&out, ".bounds.csv"), |w| bounds_csv(w, &y, &lo, &hi))?;
        }
        (None, None, Some(bp)) => {
            let coverage = coverage.context("--bounds needs --coverage")?;
            check_coverage(coverage)?;
            if ad.is_some() {
                bail!("--ad needs --interval and --data");
            }
            let (y, lo, hi) = read_bounds(&bp)?;
            let er = ExperimentReport::evaluate(&lo, &hi, &y, coverage)?;
            rep.push("data.rows", y.len());
            rep.push_experiment("metrics", &er);
        }
        _ => bail!("give either --interval with --data, or --bounds"),
    }
    finish(&rep, &out, outputs)
}
