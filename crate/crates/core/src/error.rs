use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain side lengths must be positive and finite (a1 = {a1}, a2 = {a2})")]
    NonPositiveDomain { a1: f64, a2: f64 },

    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("point ({}, {}) lies outside the closed domain", .point[0], .point[1])]
    OutOfDomain { point: [f64; 2] },

    #[error("arc coordinate {s} outside region [{lo}, {hi}]")]
    OutOfRegion { s: f64, lo: f64, hi: f64 },

    #[error("invalid boundary region: {0}")]
    InvalidRegion(String),

    #[error("invalid sensor geometry: {0}")]
    InvalidGeometry(String),

    #[error("{distribution} distribution is not supported on a {kind} sensor")]
    UnsupportedCombination {
        kind: &'static str,
        distribution: &'static str,
    },

    #[error("sensor support too small to integrate: {0}")]
    QuadratureUnderflow(String),

    #[error("sensor suite is empty")]
    EmptySuite,

    #[error("coefficients were built for a different mode set")]
    ModeSetMismatch,

    #[error("time horizon must be positive (got {0})")]
    NonPositiveHorizon(f64),

    #[error("locus test needs an exact rational coordinate: {0}")]
    IrrationalUnsupported(String),

    #[error("collar radius {radius} too large: the collar reaches across the domain (limit {limit})")]
    RadiusTooLarge { radius: f64, limit: f64 },

    #[error("tabulated field under-resolved: {samples} intervals per axis, need at least {required}")]
    QuadratureUnderResolved { samples: usize, required: usize },

    #[error("observation map is numerically singular (rcond = {rcond:e}); the suite does not observe every mode")]
    SingularSystem { rcond: f64 },

    #[error("time grid mismatch: {0}")]
    HorizonMismatch(String),

    #[error("output channel mismatch: expected {expected}, found {found}")]
    ChannelMismatch { expected: usize, found: usize },
}
