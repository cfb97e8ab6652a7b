//! Experiment harness: synthetic datasets, sweeps over hidden-node and
//! signal counts, and signed edge-list ingestion, all reported as CSV.

#![allow(clippy::result_large_err)]

pub mod commands;
pub mod config;
pub mod dataset;
pub mod edgelist;
pub mod error;
pub mod report;

pub use config::{ExperimentConfig, Method, SweepAxis};
pub use error::CliError;
pub use report::{AggregateRow, BestRow, ResultRow, RESULT_HEADER};
