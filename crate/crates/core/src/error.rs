use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("control {control} is not admissible at state {state:?}")]
    InadmissibleControl { state: Vec<f64>, control: usize },

    #[error("state constraint violated at step {step}: {state:?}")]
    ConstraintViolation { step: usize, state: Vec<f64> },

    #[error("state {0:?} has no admissible controls (system is not viable there)")]
    NotViable(Vec<f64>),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("no admissible pairs")]
    NoAdmissiblePairs,

    #[error("state index {0} out of range")]
    StateOutOfRange(usize),

    #[error("control {control} is not available at state index {state}")]
    PolicyInadmissible { state: usize, control: usize },

    #[error("alpha must lie in (0,1), got {0}")]
    InvalidDiscount(f64),

    #[error("horizon must be positive")]
    InvalidHorizon,

    #[error("value iteration did not converge after {iterations} sweeps (last update {last_update:e})")]
    NotConverged { iterations: usize, last_update: f64 },

    #[error("unknown catalog entry `{0}`")]
    UnknownCatalogEntry(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("malformed linear program: {0}")]
    MalformedLp(String),

    #[error("linear program is infeasible")]
    Infeasible,
}
