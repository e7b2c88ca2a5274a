use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("numerical breakdown at step {step}: {what} = {value} left [0, 1]")]
    NumericalBreakdown {
        step: usize,
        what: &'static str,
        value: f64,
    },

    #[error("generating-function recursion depth {requested} exceeds the cap of {cap}")]
    RecursionTooDeep { requested: usize, cap: usize },

    #[error("only the neural-death fixed point exists")]
    DeathOnly,

    #[error("ISI histogram is empty")]
    EmptyHistogram,

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
