use thiserror::Error;

/// Errors raised by the numerical routines.
///
/// Every variant carries the name of the module that raised it so that a
/// failure deep inside a scenario run can be traced back to its source.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{module}: invalid input: {msg}")]
    Input { module: &'static str, msg: String },

    #[error("{module}: fixed-point iteration did not converge after {iterations} iterations (last sup-change {last_change:e})")]
    NoConvergence {
        module: &'static str,
        iterations: usize,
        last_change: f64,
    },

    #[error("{module}: {msg}")]
    Numerical { module: &'static str, msg: String },

    #[error("stability: insufficient data for envelope fit ({found} peaks, need at least 3)")]
    InsufficientData { found: usize },
}

impl Error {
    pub(crate) fn input(module: &'static str, msg: impl Into<String>) -> Self {
        Error::Input {
            module,
            msg: msg.into(),
        }
    }

    pub(crate) fn numerical(module: &'static str, msg: impl Into<String>) -> Self {
        Error::Numerical {
            module,
            msg: msg.into(),
        }
    }

    /// True for errors caused by bad inputs rather than by the numerics.
    pub fn is_input(&self) -> bool {
        matches!(self, Error::Input { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
