use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} must be finite")]
    NonFinite { name: &'static str },

    #[error("{name} = {value} outside domain ({expected})")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("invalid parameter {key}: {reason}")]
    InvalidParam { key: String, reason: String },

    #[error("no sign change of p_up - p_down on [{lo}, {hi}] (diff {diff_lo:e} .. {diff_hi:e})")]
    NoSignChange {
        lo: f64,
        hi: f64,
        diff_lo: f64,
        diff_hi: f64,
    },

    #[error("objective not finite at alpha = {alpha}")]
    NonFiniteObjective { alpha: f64 },

    #[error("degenerate sample set: {0}")]
    Degenerate(String),

    #[error("false-alarm target {target} unattainable: {reason}")]
    Unattainable { target: f64, reason: String },

    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain<T: num_traits::ToPrimitive>(
    name: &'static str,
    value: T,
    expected: &'static str,
) -> Error {
    Error::Domain {
        name,
        value: value.to_f64().unwrap_or(f64::NAN),
        expected,
    }
}

pub(crate) fn invalid(key: &str, reason: impl Into<String>) -> Error {
    Error::InvalidParam {
        key: key.to_string(),
        reason: reason.into(),
    }
}
