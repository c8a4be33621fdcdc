use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite amplitude at site {site}")]
    NonFinite { site: i64 },

    #[error("invalid norm exponent p = {0} (need 1 <= p <= inf)")]
    InvalidExponent(f64),

    #[error("box truncation: amplitude {amplitude:e} at the box edge exceeds the tail floor {floor:e}")]
    Truncation { amplitude: f64, floor: f64 },

    #[error("kernel series did not reach tolerance {tolerance:e} within {iterations} terms")]
    SeriesNonconvergence { tolerance: f64, iterations: usize },

    #[error("evolution margin {margin} too small: predicted leakage {leakage:e} > {tolerance:e}")]
    InsufficientMargin { margin: usize, leakage: f64, tolerance: f64 },

    #[error("the field is identically zero")]
    ZeroField,

    #[error("empty diffraction profile")]
    EmptyProfile,

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("invalid nonlinearity: {0}")]
    InvalidNonlinearity(String),

    #[error("negative amplitude a = {0} passed to the potential")]
    NegativeAmplitude(f64),

    #[error("fit window has {points} usable points, need at least {required}")]
    WindowTooSmall { points: usize, required: usize },

    #[error("bracket [{lo}, {hi}] does not contain a sign change")]
    InvalidBracket { lo: f64, hi: f64 },

    #[error("line search could not decrease the energy (E = {energy:e}, projected gradient {gradient:e})")]
    LineSearchExhausted { energy: f64, gradient: f64 },

    #[error("time step rejected: norm drift {drift:e} in one step")]
    StepRejected { drift: f64 },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
