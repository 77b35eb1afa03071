//! File formats: dataset CSV, benchmark config JSON, report CSV.

mod config;
mod dataset;
mod number;
mod report;

pub use config::{BenchmarkConfig, GridConfig, CONFIG_SCHEMA};
pub use dataset::{load_dataset, read_dataset, save_dataset, write_dataset, DATASET_HEADER_PREFIX};
pub use number::{format_g17, parse_number};
pub use report::{
    emit_report, parse_report, read_report, write_report, ReportFormat, ReportRow, REPORT_HEADER,
};
