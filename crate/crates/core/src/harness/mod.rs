//! Experiment runner: trains agents under each replay strategy over several
//! seeds and reports per-epoch learning curves.

mod config;
mod metrics;
mod run;

pub use config::{ExperimentConfig, NamedSchema, SchemaSource, Strategy};
pub use metrics::{
    auc, compare_strategies, csv_string, curves, epochs_to_threshold, final_success,
    format_summaries, label, summarize, write_csv, MeanStd, MetricsRow, Summary,
    CSV_COLUMNS, CSV_HEADER_COMMENT, SMOOTHING_WINDOW, SUCCESS_THRESHOLD,
};
pub use run::{greedy_success, run_experiment};
