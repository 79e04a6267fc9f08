use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("group-velocity mismatch must be positive, got d = {0}")]
    NonPositiveGvm(f64),

    #[error("L*d/Ts = {ratio} is not a positive integer memory depth")]
    NonIntegerMemory { ratio: f64 },

    #[error("cross-phase coefficient is zero; focusing is undefined")]
    ZeroCoupling,

    #[error("power {power} is below the smallest feasible average ring power {required}")]
    InfeasiblePower { power: f64, required: f64 },

    #[error("explicit ring set rejected: {0}")]
    InvalidExplicitSet(String),

    #[error("invalid ring index set: {0}")]
    InvalidRingSet(String),

    #[error("waveform grid too short: {0}")]
    GridTooShort(String),

    #[error("receiver outputs do not share keys: {0}")]
    KeyMismatch(String),

    #[error("constellation has no points")]
    DegenerateConstellation,

    #[error("degenerate grid: {0}")]
    GridDegenerate(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
