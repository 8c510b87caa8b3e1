use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("operands live over different base spaces")]
    SpaceMismatch,
    #[error("index out of range: {0}")]
    OutOfRange(String),
    #[error("matrix is singular at the requested tolerance")]
    Singular,
    #[error("operator is not invertible: {0}")]
    NotInvertible(String),
    #[error("tail descriptors cannot be combined: {0}")]
    IncompatibleTails(String),
    #[error(
        "no cut m <= {m_max} meets the margin; operator not accepted compact at this truncation"
    )]
    NoCutFound { m_max: usize },
    #[error("pair is not a parametrix pair: {0}")]
    NotAParametrix(String),
    #[error("projector defect {residual:e} exceeds tolerance")]
    ProjectorDefect { residual: f64 },
    #[error("degenerate external decomposition: {0}")]
    DegenerateExternal(String),
    #[error("index is not locally constant along net {net}")]
    NotLocallyConstant { net: usize },
    #[error("shift operator S fails the invertibility threshold")]
    SingularS,
    #[error("matrix is not unitary: residual {residual:e}")]
    NotUnitary { residual: f64 },
    #[error("invalid space: {0}")]
    InvalidSpace(String),
    #[error("non-finite entry")]
    NonFinite,
    #[error("parse error: {0}")]
    InputParse(String),
}
