use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("division by zero")]
    DivisionByZero,
    #[error("mismatched generator lists")]
    AlphabetMismatch,
    #[error("unknown generator {0:?}")]
    UnknownGenerator(String),
    #[error("too many generators: {0} (at most 64)")]
    TooManyGenerators(usize),
    #[error("expected an even element, got {0}")]
    NotEven(&'static str),
    #[error("element has no invertible body")]
    NotInvertible,
    #[error("fractional power requires body 1")]
    BodyNotOne,
    #[error("non-nilpotent displacement: {0}")]
    NonNilpotent(String),
    #[error("sector mismatch: {0}")]
    SectorMismatch(String),
    #[error("invalid mode: {0}")]
    InvalidMode(String),
    #[error("walk coefficient is not linear in the generators: {0}")]
    NotLinear(String),
    #[error("truncation level {requested} below drift level {required}")]
    Truncation { requested: String, required: String },
    #[error("jet order {0} insufficient (second-order Ito expansion needs at least 2)")]
    JetOrder(usize),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unknown check {0:?}")]
    UnknownCheck(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("coefficient {0} is not a plain rational")]
    NotRational(String),
}

pub type Result<T> = std::result::Result<T, Error>;
