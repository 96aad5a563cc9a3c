use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("refusing to materialize a {order}x{order} matrix (limit {limit})")]
    TooLarge { order: usize, limit: usize },

    #[error("equalizer eigenvalue {index} has magnitude {magnitude:e}")]
    NearSingularEqualizer { index: usize, magnitude: f64 },

    #[error("tap ({doppler}, {delay}) lies outside the {n}x{m} delay-Doppler grid")]
    InvalidTapIndex {
        doppler: usize,
        delay: usize,
        n: usize,
        m: usize,
    },

    #[error("NOMA tap ({doppler}, {delay}) has a nonzero Doppler index")]
    DopplerOnNomaTap { doppler: usize, delay: usize },

    #[error("CSI error radius must be nonnegative, got {0}")]
    NegativeSigma(f64),

    #[error("target rate {0} BPCU is unreachable: the high-mobility SINR is always below one")]
    InfeasibleTarget(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("user index {index} outside 1..={max}")]
    UserIndexOutOfRange { index: usize, max: usize },

    #[error("beamformer is zero")]
    ZeroBeamformer,

    #[error("beamformer norm squared {0} exceeds one")]
    BeamformerNorm(f64),

    #[error("gradient undefined: |w^H h| = {0:e}")]
    DegenerateDirection(f64),

    #[error("gradient undefined inside the nulled region: |w^H g| - sigma ||w|| = {0:e}")]
    NulledRegion(f64),

    #[error("none of the {0} SCA starts reached a feasible point")]
    AllStartsFailed(usize),

    #[error("semidefinite relaxation not solved: {0}")]
    SdpInfeasible(String),

    #[error("no randomization candidate satisfies the SIC constraints")]
    NoFeasibleRandomization,

    #[error("SDR needs perfect CSI (sigma = 0), got sigma = {0}")]
    SdrRequiresPerfectCsi(f64),

    #[error("conic solver: {0}")]
    Solver(String),
}
