use crate::numerics::NumericMode;

/// Errors produced anywhere in the library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("backend mismatch: expected {expected} value, found {found}")]
    BackendMismatch {
        expected: NumericMode,
        found: NumericMode,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{field} = {value} is not a probability in [0, 1]")]
    InvalidProbability { field: String, value: String },

    #[error("cannot parse {input:?} as a probability: {reason}")]
    Parse { input: String, reason: String },

    #[error("enumeration of {count} weak compositions exceeds the guard of {guard}")]
    EnumerationTooLarge { count: String, guard: u64 },

    #[error("refusing to enumerate 2^{n} trajectories (guard is n <= {guard})")]
    TrajectoryGuard { n: usize, guard: usize },

    #[error("horizon mismatch: {left} vs {right}")]
    HorizonMismatch { left: usize, right: usize },

    #[error("census cell j={j} mixes probability monomials {first} and {other}")]
    HeterogeneousCell { j: usize, first: String, other: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
