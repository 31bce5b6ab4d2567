use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("point lies outside the observation window")]
    OutsideWindow,

    #[error("non-finite coordinate or weight")]
    NonFinite,

    #[error("wavevector lies on the singular set of the density")]
    Singular,

    #[error("{count} distinct atoms lie within the matching tolerance")]
    AmbiguousAtoms { count: usize },

    #[error("grid step {step} is coarser than the allowed {limit}")]
    GridTooCoarse { step: f64, limit: f64 },

    #[error("complex cluster weights are only supported on a deterministic comb centre")]
    ComplexClusterWithRandomCentre,

    #[error("centre weights must all equal 1")]
    WeightedCentres,

    #[error("operation needs purely atomic inputs: {0}")]
    NonAtomic(&'static str),

    #[error("pair count {pairs} exceeds the limit; restrict the lag range first")]
    TooManyPairs { pairs: u64 },

    #[error("nothing to estimate: {0}")]
    Empty(&'static str),

    #[error("population {count} exceeded the guard {limit}")]
    PopulationExplosion { count: usize, limit: usize },

    #[error("wavevector {0} is not within tolerance of the estimation grid")]
    OffGrid(f64),

    #[error("wavevector inside the exclusion zone of an atom")]
    InsideExclusion,

    #[error("atom at 0 has weight {weight} below rho^2 = {required}")]
    InconsistentOrigin { weight: f64, required: f64 },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
