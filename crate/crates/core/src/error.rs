use thiserror::Error;

/// Errors raised by the numerical and symbolic layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate q-context: {0}")]
    DegenerateContext(String),

    #[error("series diverges: |z| = {0} >= 1")]
    Divergence(f64),

    #[error("series did not converge within {0} terms")]
    NonConvergence(usize),

    #[error("trace pole: |1 - q^E| = {magnitude:.3e} for exponent {exponent}")]
    TracePole { exponent: String, magnitude: f64 },

    #[error("C_l pole at sector {sector:?}, pair ({i},{j}): |1 - q^e| = {magnitude:.3e}")]
    CartanPole {
        sector: Vec<usize>,
        i: usize,
        j: usize,
        magnitude: f64,
    },

    #[error("rank {0} too large for Weyl group enumeration (max 4)")]
    RankTooLarge(usize),

    #[error("unknown generator: {0}")]
    UnknownGenerator(String),

    #[error("invalid index: {0}")]
    InvalidIndex(String),

    #[error("repeated index {0} in Q-operator label")]
    RepeatedIndex(usize),

    #[error("degenerate spectral point: intertwiner null space has dimension {0}")]
    DegenerateSpectralPoint(usize),

    #[error("eigenvector tracking failed: {0}")]
    EigenTracking(String),

    #[error("polynomial degree mismatch: expected {expected}, residual {residual:.3e}")]
    DegreeMismatch { expected: usize, residual: f64 },

    #[error("degenerate Bethe root: {0}")]
    DegenerateRoot(String),

    #[error("Newton iteration did not converge after {iterations} steps (residual {residual:.3e})")]
    NewtonNonConvergence { iterations: usize, residual: f64 },

    #[error("singular Jacobian in Newton step")]
    SingularJacobian,

    #[error("l-weight pole: |1 - q^e x| = {magnitude:.3e} for exponent {exponent}")]
    LWeightPole { exponent: String, magnitude: f64 },

    #[error("resource bound exceeded: {0}")]
    ResourceExceeded(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("i/o error at {path}: {message}")]
    Io { path: String, message: String },

    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
