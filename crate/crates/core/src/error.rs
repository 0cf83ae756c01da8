use thiserror::Error;

use crate::solver::SolveReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} = {value} is outside the domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown symbol `{symbol}` at byte {offset}")]
    UnknownSymbol { symbol: String, offset: usize },

    #[error("symbol `{symbol}` is not allowed in `{field}`")]
    SymbolNotAllowed { symbol: String, field: String },

    #[error("symbol `{0}` has no value bound")]
    Unbound(String),

    #[error("invalid `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("degree bound {0} exceeds the supported maximum {max}", max = crate::basis::MAX_DEGREE)]
    DegreeTooLarge(usize),

    #[error("Newton iteration for Legendre root {index} of P_{n} did not converge")]
    QuadratureNonConvergence { n: usize, index: usize },

    #[error("cost integrand is not finite at node t = {t} (value {value})")]
    NonFiniteCost { t: f64, value: f64 },

    #[error("solver did not converge after {} iterations (|grad J| = {:e})", .0.iterations, .0.gradient_norm)]
    NonConvergence(Box<SolveReport>),

    #[error("unknown built-in problem `{0}`")]
    UnknownProblem(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }
}
