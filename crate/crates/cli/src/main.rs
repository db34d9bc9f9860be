//! `svmpi`: kernel quantile regression prediction intervals from the
//! command line.

mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{conformal, evaluate, featsel, forecast, generate, gridsearch, interval};

#[derive(Debug, Parser)]
#[command(name = "svmpi", version, about = "Prediction intervals from kernel quantile regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    Generate(generate::GenerateArgs),
    Interval(interval::IntervalArgs),
    Featsel(featsel::FeatselArgs),
    Conformal(conformal::ConformalArgs),
    Forecast(forecast::ForecastArgs),
    Gridsearch(gridsearch::GridsearchArgs),
    Evaluate(evaluate::EvaluateArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate(a) => generate::run(a),
        Command::Interval(a) => interval::run(a),
        Command::Featsel(a) => featsel::run(a),
        Command::Conformal(a) => conformal::run(a),
        Command::Forecast(a) => forecast::run(a),
        Command::Gridsearch(a) => gridsearch::run(a),
        Command::Evaluate(a) => evaluate::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
