use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use svmpi::conformal::{conformal_pipeline, ConformalRun, DEFAULT_CALIB_FRACTION};
use svmpi::interval::{validation_split, Method};
use svmpi::par::{self, Execution};
use svmpi::stats::{mean, sample_std};
use svmpi::{Dataset, FitOptions};

use super::{finish, load_dataset, CommonArgs, CsvArgs, ModelArgs};
use crate::output::{bounds_csv, with_suffix, Outputs, Report};

/// Split conformal intervals: fit on one part of the training data,
/// calibrate on the rest, evaluate on test data. Repeats over trials.
#[derive(Debug, Clone, Args)]
pub struct ConformalArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub csv: CsvArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Test CSV; otherwise each trial holds out --test-frac of the data.
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long)]
    pub test_frac: Option<f64>,
    /// Miscoverage level; the conformal interval targets 1 - alpha.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Share of the training data used for calibration.
    #[arg(long)]
    pub calib_frac: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub width: Option<f64>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Trial t uses seed + t; otherwise every trial repeats --seed.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", action = clap::ArgAction::Set)]
    pub vary_seed: Option<bool>,
    /// Output prefix: writes <out>.report.txt, .report.csv, .trials.csv and
    /// .bounds.csv (first trial).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

struct Trial {
    seed: u64,
    run: ConformalRun,
    test: Dataset,
}

fn trials_csv(w: &mut dyn std::io::Write, trials: &[Trial]) -> Result<()> {
    let f = svmpi::data::format_float;
    let mut c = csv::Writer::from_writer(w);
    c.write_record([
        "trial",
        "seed",
        "offset",
        "level_index",
        "degenerate",
        "raw_picp",
        "raw_mpiw",
        "picp",
        "mpiw",
    ])?;
    for (t, tr) in trials.iter().enumerate() {
        let cal = &tr.run.calibration;
        c.write_record([
            t.to_string(),
            tr.seed.to_string(),
            f(cal.offset),
            cal.level_index.to_string(),
            cal.degenerate.to_string(),
            f(tr.run.raw.picp),
            f(tr.run.raw.mpiw),
            f(tr.run.test.picp),
            f(tr.run.test.mpiw),
        ])?;
    }
    c.flush()?;
    Ok(())
}

pub fn run(args: &ConformalArgs) -> Result<()> {
    let mut r = args.common.resolver()?;
    let common = args.common.resolve(&mut r)?;
    let csv = args.csv.resolve(&mut r)?;
    let alpha = r.get("alpha", args.alpha, 0.1)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        bail!("--alpha must lie in (0, 1), got {alpha}");
    }
    let model = args.model.resolve(&mut r, Method::Svqr, 1.0 - alpha, common.seed)?;
    let data_path: PathBuf = r.require("data", args.data.clone())?;
    let test_path = r.get_opt("test", args.test.clone())?;
    let test_frac = r.get("test-frac", args.test_frac, 0.5)?;
    let calib_frac = r.get("calib-frac", args.calib_frac, DEFAULT_CALIB_FRACTION)?;
    let c = r.get("c", args.c, 1.0)?;
    let width = r.get("width", args.width, 1.0)?;
    let trials = r.get("trials", args.trials, 1usize)?;
    let vary_seed = r.get("vary-seed", args.vary_seed, false)?;
    let out: PathBuf = r.require("out", args.out.clone())?;
    let resolved = r.finish()?;
    if trials == 0 {
        bail!("--trials must be positive");
    }

    let data = load_dataset(&data_path, &csv)?;
    let fixed_test = test_path.as_ref().map(|p| load_dataset(p, &csv)).transpose()?;
    let spec = model.spec(model.q_bar.unwrap_or_else(|| model.symmetric_q_bar()), c, width);
    // Trials run in parallel, each fit on its own thread.
    let inner = FitOptions {
        exec: Execution::Sequential,
        ..common.opts
    };
    let results = par::map_indexed(common.opts.exec, trials, |t| -> Result<Trial> {
        let seed = if vary_seed { common.seed + t as u64 } else { common.seed };
        let (train, test) = match &fixed_test {
            Some(te) => (data.clone(), te.clone()),
            None => validation_split(&data, test_frac, false, seed)?,
        };
        let run = conformal_pipeline(&train, &test, &spec, alpha, calib_frac, seed, &inner)?;
        Ok(Trial { seed, run, test })
    });
    let trials_done: Vec<Trial> = results
        .into_iter()
        .enumerate()
        .map(|(t, res)| res.with_context(|| format!("trial {t}")))
        .collect::<Result<_>>()?;

    let picps: Vec<f64> = trials_done.iter().map(|t| t.run.test.picp).collect();
    let mpiws: Vec<f64> = trials_done.iter().map(|t| t.run.test.mpiw).collect();
    let raw_picps: Vec<f64> = trials_done.iter().map(|t| t.run.raw.picp).collect();
    let raw_mpiws: Vec<f64> = trials_done.iter().map(|t| t.run.raw.mpiw).collect();
    let degenerate = trials_done.iter().filter(|t| t.run.calibration.degenerate).count();
    if degenerate > 0 {
        eprintln!(
            "warning: {degenerate} trial(s) had too few calibration points for alpha = {alpha}; their offset is infinite"
        );
    }
    let first = &trials_done[0];

    let mut rep = Report::new("conformal", common.timing);
    rep.push_config(&resolved);
    rep.push("trials.count", trials);
    rep.push("trials.degenerate", degenerate);
    rep.push("calibration.rows", first.run.calibration.scores.len());
    rep.push("calibration.level_index", first.run.calibration.level_index);
    rep.push_f64("calibration.offset", first.run.calibration.offset);
    rep.push_f64("summary.picp_mean", mean(&picps));
    rep.push_f64("summary.picp_std", sample_std(&picps));
    rep.push_f64("summary.mpiw_mean", mean(&mpiws));
    rep.push_f64("summary.mpiw_std", sample_std(&mpiws));
    rep.push_f64("summary.raw_picp_mean", mean(&raw_picps));
    rep.push_f64("summary.raw_mpiw_mean", mean(&raw_mpiws));
    rep.push_experiment("first_trial.raw", &first.run.raw);
    rep.push_experiment("first_trial.conformal", &first.run.test);

    let (lo, hi) = first.run.interval.bounds(first.test.inputs.view())?;
    let y = first.test.targets.to_vec();
    let mut outputs = Outputs::new();
    outputs.add_with(with_suffix(&out, ".trials.csv"), |w| trials_csv(w, &trials_done))?;
    outputs.add_with(with_suffix(&out, ".bounds.csv"), |w| bounds_csv(w, &y, &lo, &hi))?;
    finish(&rep, &out, outputs)
}
