use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Args;
use svmpi::data::write_csv_to;
use svmpi::forecast::{seasonal_series, write_series_to, SeasonalSpec};
use svmpi::generators::{generate_ad_with, AdSet, NormalScale};

use crate::config::Resolver;
use crate::output::Outputs;

/// Write an artificial dataset (AD1..AD6) or a seasonal series as CSV.
#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    /// Flat TOML file whose keys mirror the long flag names.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// AD1..AD6.
    #[arg(long)]
    pub ad: Option<AdSet>,
    /// Write a seasonal series instead of an AD set.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", action = clap::ArgAction::Set)]
    pub seasonal: Option<bool>,
    /// Number of rows (or series length).
    #[arg(long)]
    pub m: Option<usize>,
    /// How the second parameter of N(0, s) is read: stddev or variance.
    #[arg(long)]
    pub noise_scale: Option<NormalScale>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: &GenerateArgs) -> Result<()> {
    let mut r = Resolver::load(args.config.as_deref())?;
    let seed = r.get("seed", args.seed, 0u64)?;
    let seasonal = r.get("seasonal", args.seasonal, false)?;
    let m = r.get("m", args.m, 500usize)?;
    let out: PathBuf = r.require("out", args.out.clone())?;
    let mut outputs = Outputs::new();
    if seasonal {
        let spec = SeasonalSpec::default();
        r.finish()?;
        let series = seasonal_series(m, &spec, seed)?;
        outputs.add_with(&out, |w| Ok(write_series_to(w, &series)?))?;
    } else {
        let ad = r.get("ad", args.ad, AdSet::AD1)?;
        let scale = r.get("noise-scale", args.noise_scale, NormalScale::StdDev)?;
        r.finish()?;
        if m == 0 {
            bail!("--m must be positive");
        }
        let data = generate_ad_with(ad, m, seed, scale)?;
        outputs.add_with(&out, |w| Ok(write_csv_to(w, &data)?))?;
    }
    outputs.commit()?;
    eprintln!("wrote {m} rows to {}", out.display());
    Ok(())
}
