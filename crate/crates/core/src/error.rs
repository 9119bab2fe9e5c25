use alloc::string::String;

/// Errors reported by the optimizer and its building blocks.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("antenna index {index} out of range for {len} antennas")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("frequency must be positive, got {0} Hz")]
    NonPositiveFrequency(f64),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("inverted range: lower bound {lo} exceeds upper bound {hi}")]
    InvertedRange { lo: f64, hi: f64 },

    #[error("sample count must be at least 1")]
    ZeroCount,

    #[error("infeasible geometry: {0}")]
    InfeasibleGeometry(String),

    #[error("degenerate coverage region: {0}")]
    DegenerateRegion(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("solver failed: {0}")]
    Solver(String),
}

pub type Result<T> = core::result::Result<T, Error>;
