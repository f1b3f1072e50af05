use thiserror::Error;

/// Errors raised by the signal, estimation, and basis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("time {t} lies outside the sampled support [{lo}, {hi}]")]
    OutOfSupport { t: f64, lo: f64, hi: f64 },

    #[error("quadrature produced a non-finite value at node {node}")]
    QuadratureFailure { node: f64 },

    #[error("only {found} tail samples exceed the vanishing floor (need {needed})")]
    SignalVanished { found: usize, needed: usize },

    #[error("fitted log-slope {slope} is not decaying")]
    NonDecaying { slope: f64 },

    #[error("e^(rate*t)*x(t) grows by {growth:.3e} across the tail window; the rate is overestimated")]
    Diverging { growth: f64 },

    #[error("gamma pole: argument {arg} is a non-positive integer")]
    GammaPole { arg: f64 },

    #[error("rank-deficient prediction system at order {order}")]
    RankDeficient { order: usize },

    #[error("invalid signal: {0}")]
    InvalidSignal(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("functional ledger out of order: expected index {expected}, got {got}")]
    LedgerOrder { expected: usize, got: usize },

    #[error("{0}")]
    Parse(String),

    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
