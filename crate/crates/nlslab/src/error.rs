use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid must have n >= 8 with n a power of two, got n = {0}")]
    BadGridSize(usize),

    #[error("grid half-width must be positive and finite, got L = {0}")]
    BadGridExtent(f64),

    #[error("fields live on different grids: {0:?} vs {1:?}")]
    GridMismatch(crate::grid::Grid3, crate::grid::Grid3),

    #[error("non-finite sample at node ({0}, {1}, {2}) = ({3}, {4}, {5})")]
    NonFiniteSample(usize, usize, usize, f64, f64, f64),

    #[error("singular potential evaluation at node ({0}, {1}, {2}); regularize with eps > 0")]
    SingularPotential(usize, usize, usize),

    #[error("potential violates sign condition: {0}")]
    SignViolation(String),

    #[error("shooting bracket not found in [{0}, {1}]")]
    BracketNotFound(f64, f64),

    #[error("iteration failed to converge after {iters} steps (residual {residual:.3e})")]
    NonConvergence { iters: usize, residual: f64 },

    #[error("soliton tail at box boundary is {tail:.3e} (> {tol:.3e}); enlarge the box or move the center")]
    SupportLeavesBox { tail: f64, tol: f64 },

    #[error("threshold normalization not satisfied: {0}")]
    NotNormalized(String),

    #[error("no admissible threshold root: {0}")]
    NoThresholdRoot(String),

    #[error("time step {dt} too large: kinetic phase per substep {phase:.3} must stay below pi")]
    StepTooLarge { dt: f64, phase: f64 },

    #[error("blowup detected at t = {t}: |u| reached {amp:.3e} near ({x:.2}, {y:.2}, {z:.2})")]
    Blowup { t: f64, amp: f64, x: f64, y: f64, z: f64 },

    #[error("trajectory stride too coarse for virial residual: {0} rows")]
    StrideTooCoarse(usize),

    #[error("operation requires a nonzero field")]
    ZeroField,

    #[error("snapshot format error: {0}")]
    SnapshotFormat(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
