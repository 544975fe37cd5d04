use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("entropy exponent m = {0} must be greater than 1")]
    InvalidExponent(f64),
    #[error("occupation {0} lies outside [0, 1]")]
    OccupationOutOfRange(f64),
    #[error("level index must be at least 1")]
    InvalidLevelIndex,
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("the linear energy is unbounded from below for this entropy")]
    UnboundedModel,
    #[error("charge {q} cannot be bound (largest reachable charge {q_max})")]
    UnreachableCharge { q: f64, q_max: f64 },
    #[error("density blocks do not match the grid or channel layout")]
    GridMismatch,
    #[error("density block eigenvalue {0} lies outside [0, 1]")]
    SpectrumOutOfRange(f64),
    #[error("charge must be nonnegative, got {0}")]
    NegativeCharge(f64),
    #[error("operation requires a converged minimizer")]
    Unconverged,
    #[error("midpoint iteration diverged at dt = {0}; use a smaller time step")]
    StepDiverged(f64),
    #[error("Krylov propagator did not reach tolerance within {0} blocks")]
    KrylovStalled(usize),
    #[error("series did not reach the requested precision within {0} terms")]
    PrecisionLimit(u64),
}
