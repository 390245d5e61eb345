use alloc::string::String;

/// Errors produced by the core library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("degenerate state: round {round} left no target samples included")]
    Degenerate { round: usize },
    #[error("degenerate series: {0}")]
    DegenerateSeries(String),
    #[error("data error: {0}")]
    Data(String),
}

pub type Result<T> = core::result::Result<T, Error>;
