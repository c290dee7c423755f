use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("configuration has {actual} spins but the model has {expected}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("{n} spins exceeds the dense limit of {max}")]
    TooManySpins { n: usize, max: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("eigensolver failed to converge")]
    EigenNoConvergence,
    #[error("perturbative regime exceeded: row mass {row_mass} > 1; h must stay below {h_threshold}")]
    PerturbativeRegimeExceeded { row_mass: f64, h_threshold: f64 },
    #[error("effective large-field Hamiltonian requires a pairwise (SK) model")]
    NotPairwise,
    #[error("transition matrix has negative diagonal {value} at state {state}")]
    NegativeDiagonal { state: usize, value: f64 },
    #[error("detailed balance violated: relative residual {residual}")]
    DetailedBalance { residual: f64 },
    #[error("chain did not mix within {cap} steps")]
    MixingCap { cap: u64 },
    #[error("transition matrices do not share a stationary distribution")]
    StationaryMismatch,
    #[error("cut must be a nonempty proper subset")]
    DegenerateCut,
    #[error("no energy-threshold cut with pi(B) <= 1/2")]
    NoAdmissibleCut,
    #[error("cut is not energy ordered: every state in B must lie strictly above B^c")]
    CutNotEnergyOrdered,
    #[error("energy window contains no configurations")]
    EmptyWindow,
    #[error("state space of {states} states is too large for exhaustive search")]
    StateSpaceTooLarge { states: usize },
    #[error("N(N-1)e^(-4 beta) = {value} must be below 2")]
    TemperatureTooHigh { value: f64 },
    #[error("scaling fit needs at least 3 distinct sizes, got {0}")]
    TooFewSizes(usize),
    #[error("scaling fit needs positive gaps, got {0}")]
    NonPositiveGap(f64),
}
