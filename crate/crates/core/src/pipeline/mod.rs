//! End-to-end orchestration: analysis reports, cached training runs and
//! plot-series output.

pub mod cache;
pub mod config;
pub mod plots;
pub mod report;
pub mod run;

pub use cache::{config_hash, train_or_load, TrainedModel};
pub use config::{PeriodSelection, PipelineConfig, ReportFormat, VariantSelection};
pub use plots::{bound_table, emit_plot_series, plot_series, Figure};
pub use report::{analyze, AnalysisOptions, AnalysisReport, Flags, FrequencyReport};
pub use run::{run_pipeline, PipelineOutcome, SeedOutcome};
