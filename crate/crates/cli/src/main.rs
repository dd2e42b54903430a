use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use smoothnn::harness::{
    emit_outputs, load_result, report_text, run_cover, run_dimension, run_experiment,
    run_worstcase, CoverSummary, ExperimentConfig, Format, WORKERS_ENV,
};
use smoothnn::Error;

#[derive(Parser)]
#[command(
    name = "smoothnn",
    version,
    about = "Smoothed online nearest-neighbour experiments"
)]
#[command(after_help = format!("Worker count for trial pools is read from {WORKERS_ENV}."))]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run an experiment and write its curves, plots and result JSON.
    Run { config: PathBuf },
    /// Greedy mutually-labelling covers at the configured radii.
    Cover { config: PathBuf },
    /// Box-counting dimension and Minkowski content of the boundary.
    Dim { config: PathBuf },
    /// Alternating-pair worst case against the learner.
    Worstcase { config: PathBuf },
    /// Summarise a result directory and re-render its plots.
    Report { dir: PathBuf },
}

fn json_err(e: serde_json::Error) -> Error {
    Error::Serde(e.to_string())
}

fn run(cmd: Cmd) -> Result<String, Error> {
    match cmd {
        Cmd::Run { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let r = run_experiment(&cfg)?;
            Ok(report_text(&r))
        }
        Cmd::Cover { config } => serde_json::to_string_pretty(&cover_view(&run_cover(
            &ExperimentConfig::load(&config)?,
        )?))
        .map_err(json_err),
        Cmd::Dim { config } => {
            serde_json::to_string_pretty(&run_dimension(&ExperimentConfig::load(&config)?)?)
                .map_err(json_err)
        }
        Cmd::Worstcase { config } => {
            serde_json::to_string_pretty(&run_worstcase(&ExperimentConfig::load(&config)?)?)
                .map_err(json_err)
        }
        Cmd::Report { dir } => {
            let r = load_result(&dir)?;
            emit_outputs(&r, &dir, &[Format::Svg])?;
            Ok(report_text(&r))
        }
    }
}

/// Cover summaries without the ball lists, which go to files.
fn cover_view(s: &CoverSummary) -> serde_json::Value {
    let covers: Vec<serde_json::Value> = s
        .reports
        .iter()
        .map(|c| {
            serde_json::json!({
                "r": c.r,
                "n_ml_upper": c.n_ml_upper,
                "layers": c.layers,
                "residual_mass_est": c.residual_mass_est,
                "complement_mass_est": c.complement_mass_est,
                "miss_rate": c.miss_rate,
                "warning": c.warning,
            })
        })
        .collect();
    serde_json::json!({ "covers": covers, "scaling": s.scaling })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(out) => {
            println!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let body = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{body}");
            ExitCode::FAILURE
        }
    }
}
