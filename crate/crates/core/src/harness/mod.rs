//! Manifest-driven batch evaluation: per-sample pipeline, parallel runs,
//! aggregation and report output.

pub mod manifest;
pub mod record;
pub mod report;
pub mod run;
pub mod seed;

use std::path::PathBuf;

use thiserror::Error;

pub use manifest::{load_manifest, Manifest, RunConfig, SampleEntry};
pub use record::{MetricRecord, SkipReason, Status};
pub use report::{aggregate, aggregate_with, render_report, write_report, AggregateRow, ReportFormat, StdKind};
pub use run::{read_records, run_manifest, run_sample, run_to_dir, RunSummary};
pub use seed::sample_seed;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid manifest: {0}")]
    Manifest(String),
    #[error("invalid record {path}: {message}")]
    Record { path: PathBuf, message: String },
    #[error("report: {0}")]
    Report(String),
    #[error("cannot start worker pool: {0}")]
    ThreadPool(String),
    #[error("two records map to the same file name {0}")]
    NameCollision(String),
}
