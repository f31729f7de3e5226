use crate::exactalg::Poly;
use thiserror::Error;

/// Every failure mode surfaced by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },
    #[error("matrix is not invertible")]
    NotInvertible,
    #[error("field is infinite")]
    InfiniteField,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("field mismatch")]
    FieldMismatch,
    #[error("spectrum does not split over the base field; leftover factor {0}")]
    NonSplitSpectrum(Poly),
    #[error("enumeration of {needed} candidates exceeds budget {budget}")]
    BudgetExceeded { needed: u128, budget: u64 },
    #[error("field too small: {needed} distinct scalars required, {available} available")]
    FieldTooSmall { needed: u64, available: u64 },
    #[error("poset is not a chain")]
    NotAChain,
    #[error("structure mismatch: {0}")]
    StructureMismatch(String),
    #[error("spatial matrix is not a cube")]
    NotCube,
    #[error("invalid poset: {0}")]
    InvalidPoset(String),
    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("internal consistency failure: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
