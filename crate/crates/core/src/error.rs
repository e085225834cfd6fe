use thiserror::Error;

/// Errors produced by the library. Validation problems in chromosomes are
/// reported as [`crate::genome::Violation`] lists instead.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("gene index {index} out of range 1..={len}")]
    GeneIndex { index: usize, len: usize },

    #[error("input variable {index} out of range for {inputs} inputs")]
    InputIndex { index: usize, inputs: usize },

    #[error("input count {0} outside supported range 1..={max}", max = crate::eval::MAX_INPUTS)]
    InputCount(usize),

    #[error("unknown gate id {0}")]
    UnknownGate(u8),

    #[error("truth vector length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("chromosome length mismatch: {left} vs {right}")]
    ChromosomeLength { left: usize, right: usize },

    #[error("primitive `{0}` cannot be evaluated in this context")]
    PrimitiveMismatch(String),

    #[error("invalid primitive set: {0}")]
    PrimitiveSet(String),

    #[error("invalid chromosome: {0}")]
    InvalidChromosome(String),

    #[error("invalid knapsack instance: {0}")]
    Instance(String),

    #[error("invalid parameters: {0}")]
    Params(String),

    #[error("regression fitness needs at least one case")]
    NoCases,

    #[error("i/o: {0}")]
    Io(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }
}
