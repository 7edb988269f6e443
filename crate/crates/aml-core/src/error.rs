//! Crate-wide error type.

use thiserror::Error;

#[derive(Error, Debug)]
pub enum AmlError {
    #[error("objective is not finite at {point:?} (value {value})")]
    NonFiniteObjective { point: Vec<f64>, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("optimizer failed: {0}")]
    Optim(String),

    #[error("quadrature subdivision budget exhausted (best estimate {estimate}, error bound {error_bound})")]
    QuadratureBudget { estimate: f64, error_bound: f64 },

    #[error("quadrature failed at date {date}: {source}")]
    QuadratureAtDate {
        date: usize,
        #[source]
        source: Box<AmlError>,
    },

    #[error("long-run variance needs more observations than lags (T = {t}, lags = {lags})")]
    LrvTooShort { t: usize, lags: usize },

    #[error("simulation failed at theta {theta:?}: {reason}")]
    Simulation { theta: Vec<f64>, reason: String },

    #[error("singular Jacobian of the simulated score map (identification failure)")]
    SingularJacobian,

    #[error("particle weights collapsed to zero at date {date}")]
    WeightCollapse { date: usize },

    #[error("dense state space too large: 2^{k_bar} states exceeds the k_bar <= {limit} guard")]
    StateSpaceTooLarge { k_bar: usize, limit: usize },

    #[error("{dropped} of {total} replications failed to converge (more than 20%)")]
    TooManyDropped { dropped: usize, total: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("failed to parse {path} at line {line}: {reason}")]
    Parse {
        path: String,
        line: usize,
        reason: String,
    },

    #[error("degenerate regressor in backtest regression")]
    DegenerateRegressor,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, AmlError>;
