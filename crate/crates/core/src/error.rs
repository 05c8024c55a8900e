use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("path-loss exponent {0} must exceed 2 for the interference integral to converge")]
    DivergentInterference(f64),

    #[error("nodes {0} and {1} share a position")]
    DegenerateGeometry(u32, u32),

    #[error("unknown node id {0}")]
    UnknownNode(u32),

    #[error("message index {index} out of range for {bits}-bit messages")]
    MessageOutOfRange { index: usize, bits: u32 },

    #[error("decoder input rejected: {0}")]
    Decoder(String),

    #[error("exhaustive search over {0} hypotheses exceeds the oracle limit")]
    OracleTooLarge(u128),

    #[error("{0} requires at least one entry")]
    Empty(&'static str),

    #[error("non-positive input: {0}")]
    NonPositive(&'static str),

    #[error("fixture parse error at line {line}: {msg}")]
    Fixture { line: usize, msg: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
