use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} entries, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("share {share} of agent {agent} is below the domain floor {floor}")]
    BelowDomainFloor { agent: usize, share: f64, floor: f64 },

    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),

    #[error("target cost {eta} is below the achievable cost {cost} at the upper share")]
    TargetBelowCost { eta: f64, cost: f64 },

    #[error("invalid allocation: {0}")]
    InvalidAllocation(String),

    #[error("non-straggler shares sum to {sum}, exceeding the unit budget")]
    BudgetExceeded { sum: f64 },

    #[error("step size must lie in (0, 1), got {0}")]
    InvalidStepSize(f64),

    #[error("share of agent {agent} is zero; the KL divergence is undefined")]
    ZeroShare { agent: usize },

    #[error("share {share} is too close to the domain floor {floor} for the difference stencil")]
    StencilOutOfDomain { share: f64, floor: f64 },

    #[error("perturbation radius {delta} does not fit inside the feasible set at the current point")]
    PerturbationTooLarge { delta: f64 },

    #[error("no feasible allocation reaches cost {eta}")]
    Infeasible { eta: f64 },

    #[error("distance {distance} m is below the reference distance {reference} m")]
    DistanceBelowReference { distance: f64, reference: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("processing trace: {0}")]
    Trace(String),

    #[error("processing trace has no entry for round {round}, agent {agent}")]
    TraceExhausted { round: usize, agent: usize },

    #[error("configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
