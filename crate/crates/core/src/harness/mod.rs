//! Experiment configs, the trial runner, statistical checks, and output
//! writers.

mod config;
mod emit;
mod run;
mod stats;
pub mod svg;
mod tasks;

pub use config::{
    dyadic_checkpoints, AnalysisConfig, CoverSection, DimensionSection, ExperimentConfig, Format,
    WorstCaseSection,
};
pub use emit::{emit_outputs, load_result, report_text};
pub use run::{
    run_experiment, with_workers, BoundOverlay, CurvePoint, ExperimentResult, TrialSummary,
    WORKERS_ENV,
};
pub use stats::{
    azuma_check, fit_exponent, mean_ci, median, AzumaReport, AzumaTracker, ExponentFit, MeanCi,
};
pub use tasks::{
    run_cover, run_dimension, run_worstcase, CoverSummary, DimensionReport, WorstCaseReport,
};
