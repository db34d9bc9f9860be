//! Subcommands and the argument groups they share.

pub mod conformal;
pub mod evaluate;
pub mod featsel;
pub mod forecast;
pub mod generate;
pub mod gridsearch;
pub mod interval;

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use svmpi::data::{read_csv, CsvOptions};
use svmpi::interval::{check_coverage, check_q_bar, IntervalSpec, Method, TubeSettings};
use svmpi::models::TubeConfig;
use svmpi::{Dataset, Execution, FitOptions, KernelFamily, KernelSpec};

use crate::config::Resolver;
use crate::output::Report;

/// Boolean flags take an optional value so a config file can set them and
/// `--flag false` can override it.
#[derive(Debug, Clone, Args, Default)]
pub struct CommonArgs {
    /// Flat TOML file whose keys mirror the long flag names.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Run every fit on the calling thread.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", action = clap::ArgAction::Set)]
    pub sequential: Option<bool>,
    /// Write wall-clock fields; `--timing false` makes reports byte-stable.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", action = clap::ArgAction::Set)]
    pub timing: Option<bool>,
    #[arg(long)]
    pub qp_tol: Option<f64>,
    #[arg(long)]
    pub lp_tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Clone, Copy)]
pub struct Common {
    pub seed: u64,
    pub opts: FitOptions,
    pub timing: bool,
}

impl CommonArgs {
    pub fn resolver(&self) -> Result<Resolver> {
        Resolver::load(self.config.as_deref())
    }

    pub fn resolve(&self, r: &mut Resolver) -> Result<Common> {
        let defaults = FitOptions::default();
        let seed = r.get("seed", self.seed, 0u64)?;
        let sequential = r.get("sequential", self.sequential, false)?;
        let timing = r.get("timing", self.timing, true)?;
        let qp_tol = r.get("qp-tol", self.qp_tol, defaults.qp_tol)?;
        let lp_tol = r.get("lp-tol", self.lp_tol, defaults.lp_tol)?;
        let max_iter = r.get_opt("max-iter", self.max_iter)?;
        for (name, v) in [("qp-tol", qp_tol), ("lp-tol", lp_tol)] {
            if !(v > 0.0 && v.is_finite()) {
                bail!("--{name} must be positive, got {v}");
            }
        }
        let exec = if sequential { Execution::Sequential } else { Execution::Parallel };
        Ok(Common {
            seed,
            opts: FitOptions {
                qp_tol,
                lp_tol,
                max_iter,
                exec,
            },
            timing,
        })
    }
}

/// How a CSV dataset is read.
#[derive(Debug, Clone, Args, Default)]
pub struct CsvArgs {
    /// Treat the first row as data rather than a header.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", action = clap::ArgAction::Set)]
    pub no_header: Option<bool>,
    /// Zero-based target column (default: last).
    #[arg(long)]
    pub target_column: Option<usize>,
}

impl CsvArgs {
    pub fn resolve(&self, r: &mut Resolver) -> Result<CsvOptions> {
        let no_header = r.get("no-header", self.no_header, false)?;
        let target_column = r.get_opt("target-column", self.target_column)?;
        Ok(CsvOptions {
            has_header: !no_header,
            target_column,
        })
    }
}

pub fn load_dataset(path: &Path, csv: &CsvOptions) -> Result<Dataset> {
    read_csv(path, csv).with_context(|| format!("reading dataset {}", path.display()))
}

/// Method and model hyperparameters shared by the interval commands.
#[derive(Debug, Clone, Args, Default)]
pub struct ModelArgs {
    /// svqr, ssvqr, lssvr or tube.
    #[arg(long)]
    pub method: Option<Method>,
    /// Target coverage 1 - alpha.
    #[arg(long)]
    pub coverage: Option<f64>,
    /// Lower quantile level; the upper is q_bar + coverage.
    #[arg(long)]
    pub q_bar: Option<f64>,
    /// linear or rbf.
    #[arg(long)]
    pub kernel: Option<KernelFamily>,
    /// Tube movement parameter r.
    #[arg(long)]
    pub tube_r: Option<f64>,
    /// Tube width penalty delta.
    #[arg(long)]
    pub tube_delta: Option<f64>,
    #[arg(long)]
    pub tube_step: Option<f64>,
    #[arg(long)]
    pub tube_epochs: Option<usize>,
}

#[derive(Debug, Clone, Copy)]
pub struct Model {
    pub method: Method,
    pub coverage: f64,
    /// Explicit q_bar, or `None` to tune (or use the symmetric level).
    pub q_bar: Option<f64>,
    pub kernel: KernelFamily,
    pub tube: TubeSettings,
}

impl ModelArgs {
    pub fn resolve(&self, r: &mut Resolver, default_method: Method, default_coverage: f64, seed: u64) -> Result<Model> {
        let method = r.get("method", self.method, default_method)?;
        let coverage = r.get("coverage", self.coverage, default_coverage)?;
        check_coverage(coverage)?;
        let q_bar = r.get_opt("q-bar", self.q_bar)?;
        if let Some(q) = q_bar {
            check_q_bar(q, coverage)?;
        }
        let kernel = r.get("kernel", self.kernel, KernelFamily::Rbf)?;
        let mut tube = TubeSettings::default();
        if method == Method::Tube {
            tube.r = r.get("tube-r", self.tube_r, tube.r)?;
            tube.delta = r.get("tube-delta", self.tube_delta, tube.delta)?;
            tube.config = TubeConfig {
                step: r.get("tube-step", self.tube_step, tube.config.step)?,
                max_epochs: r.get("tube-epochs", self.tube_epochs, tube.config.max_epochs)?,
                seed,
                ..tube.config
            };
            tube.config.validate()?;
        }
        Ok(Model {
            method,
            coverage,
            q_bar,
            kernel,
            tube,
        })
    }
}

impl Model {
    pub fn symmetric_q_bar(&self) -> f64 {
        (1.0 - self.coverage) / 2.0
    }

    pub fn spec(&self, q_bar: f64, c: f64, width: f64) -> IntervalSpec {
        IntervalSpec {
            tube: self.tube,
            ..IntervalSpec::new(
                self.method,
                self.coverage,
                q_bar,
                c,
                KernelSpec {
                    family: self.kernel,
                    width,
                },
            )
        }
    }
}

pub fn check_positive_grid(name: &str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        bail!("--{name} is empty");
    }
    if let Some(v) = grid.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        bail!("--{name} values must be positive and finite, got {v}");
    }
    Ok(())
}

/// Prints the report, stages it next to `out`, and commits every output.
pub fn finish(report: &Report, out: &Path, mut outputs: crate::output::Outputs) -> Result<()> {
    outputs.add_report(out, report)?;
    outputs.commit()?;
    print!("{}", report.to_text());
    Ok(())
}
