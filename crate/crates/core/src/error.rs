use thiserror::Error;

use crate::brjuno::SeriesEval;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// `eval_b` only accepts irrationals; rationals go through `eval_btilde`.
    #[error("{0} is rational; the series diverges there, use eval_btilde")]
    RationalInput(String),

    /// The quotient source ran out before the requested depth.
    #[error("quotient source exhausted at index {index} (available depth {available})")]
    Exhausted { index: usize, available: usize },

    /// An integer or evaluation budget was exceeded. `partial` carries the
    /// best series value reached, with an honest tail bound.
    #[error("resource limit exceeded: {what}")]
    Resource {
        what: String,
        partial: Option<Box<SeriesEval>>,
    },

    /// Too few usable scales survived for a regression.
    #[error("estimation failed: {0}")]
    Estimation(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn resource(what: impl Into<String>) -> Self {
        Error::Resource {
            what: what.into(),
            partial: None,
        }
    }

    /// Process exit code used by the CLI: 2 for bad input, 3 for resource errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Resource { .. } | Error::Exhausted { .. } => 3,
            Error::Estimation(_) => 3,
            Error::Domain(_) | Error::RationalInput(_) | Error::Parse(_) => 2,
        }
    }
}
