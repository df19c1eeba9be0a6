use thiserror::Error;

/// Errors produced by the symbolic kernel and the checks built on it.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("unknown identifier `{name}` at {pos}")]
    UnknownIdentifier { name: String, pos: usize },

    #[error("singular denominator")]
    SingularDenominator,

    #[error("inconclusive: no valid sample")]
    Inconclusive,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("orientation cycle: {0}")]
    OrientationCycle(String),

    #[error("cannot orient `{expr}` for `{target}`: {reason}")]
    Orientation {
        expr: String,
        target: String,
        reason: String,
    },

    #[error("incompatible μ: {0}")]
    IncompatibleMu(String),

    #[error("gauge map is singular: determinant vanishes identically")]
    SingularGauge,

    #[error("jet-dependent coefficients — supply γ or P explicitly")]
    JetDependentCoefficients,

    #[error("μ is not closed: {0}")]
    NotClosed(String),

    #[error("antiderivative not in supported class: {0}")]
    UnsupportedAntiderivative(String),

    #[error("not polynomial in {var}: offending kernel {kernel}")]
    NotPolynomial { var: String, kernel: String },

    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
