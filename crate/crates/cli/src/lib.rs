//! Verification runner: presets, seeded identity suites, solvers and JSON/CSV reports.

pub mod args;
pub mod config;
pub mod presets;
pub mod report;
pub mod run;

use thiserror::Error;

pub use config::{RunConfig, Task};
pub use report::{Outcome, Report, Table, REPORT_SCHEMA};
pub use run::run;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
    #[error(transparent)]
    Parse(#[from] wavekahler::expr::ParseError),
    #[error(transparent)]
    Geom(#[from] wavekahler::framegeo::GeomError),
    #[error(transparent)]
    Wave(#[from] wavekahler::wavebuild::WaveError),
    #[error(transparent)]
    Dim4(#[from] wavekahler::dim4::Dim4Error),
    #[error(transparent)]
    Hirzebruch(#[from] wavekahler::hirzebruch::HirzError),
}

/// Exit status for a breach of tolerance; hard errors use 2.
pub const EXIT_BREACH: i32 = 1;
pub const EXIT_ERROR: i32 = 2;
