use thiserror::Error;

/// Errors produced by the symbolic toolkit.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("unknown variable `{name}` at byte {pos}")]
    UnknownVariable { name: String, pos: usize },

    #[error("reserved variable `{name}` may not appear in a coefficient (byte {pos})")]
    ReservedVariable { name: String, pos: usize },

    #[error("invalid ring: {0}")]
    InvalidRing(String),

    #[error("ring mismatch: {0}")]
    CtxMismatch(String),

    #[error("non-invertible image: {0}")]
    NonInvertibleImage(String),

    #[error("not divisible: {0}")]
    NotDivisible(String),

    #[error("non-square map: {0}")]
    NonSquareMap(String),

    #[error("invalid blow-up center: {0}")]
    InvalidCenter(String),

    #[error("non-schematic chart: {0}")]
    NonSchematicChart(String),

    #[error("derivation is not p-closed: {0}")]
    NotPClosed(String),

    #[error("Laurent coefficients not supported here: {0}")]
    LaurentNotSupported(String),

    #[error("generator `{0}` is not annihilated by the derivation")]
    GeneratorNotInvariant(String),

    #[error("precondition failed: {0}")]
    PreconditionFailed(String),

    #[error("invalid argument: {0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, Error>;
