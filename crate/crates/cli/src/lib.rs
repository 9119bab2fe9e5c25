//! Experiment runner for `sixdma-core`: reads a flat JSON config, runs the
//! benchmark schemes, and writes gain fields, traces and summaries as CSV and
//! JSON.

pub mod config;
pub mod experiment;
pub mod output;

use sixdma_core::Error;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Geometry(String),
    #[error("{0}")]
    Solver(String),
    #[error("io error: {0}")]
    Io(String),
}

impl CliError {
    /// Process exit status: 2 config, 3 geometry, 4 solver, 1 IO.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => 2,
            Self::Geometry(_) => 3,
            Self::Solver(_) => 4,
            Self::Io(_) => 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::InfeasibleGeometry(_) => Self::Geometry(msg),
            Error::InvalidConfig(_)
            | Error::InvertedRange { .. }
            | Error::ZeroCount
            | Error::NonPositiveFrequency(_)
            | Error::DegenerateRegion(_) => Self::Config(msg),
            Error::Solver(_) | Error::IndexOutOfRange { .. } | Error::LengthMismatch { .. } => Self::Solver(msg),
        }
    }
}
