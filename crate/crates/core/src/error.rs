use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("position {x} lies outside the well (0, {length})")]
    WallEvaluation { x: f64, length: f64 },

    #[error("relative energy drift {drift:.3e} exceeds bound {bound:.3e}; reduce the step size")]
    EnergyDrift { drift: f64, bound: f64 },

    #[error("trajectory escaped the integration domain at t = {t}")]
    DomainEscape { t: f64 },

    #[error("caustic: |J| = {jacobi:.3e} below {eps:.3e} at t = {t}")]
    Caustic { jacobi: f64, eps: f64, t: f64 },

    #[error("degenerate path family: every initial momentum reaches the target (focal point)")]
    DegeneratePaths,

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("wavefunction vanishes identically")]
    EmptyState,

    #[error("momentum content reaches the grid Nyquist limit (tail mass {tail_mass:.3e})")]
    Aliasing { tail_mass: f64 },

    #[error("time step {dt} does not resolve the fastest phase (limit {limit:.3e})")]
    TimeStepTooLarge { dt: f64, limit: f64 },

    #[error("norm drifted to {norm} at t = {t}")]
    NormDrift { norm: f64, t: f64 },

    #[error("{masked} of {total} grid points hit a caustic (limit 5%)")]
    ExcessiveCaustics { masked: usize, total: usize },

    #[error("position {x} at t = {t} lies outside the grid domain")]
    OutOfDomain { x: f64, t: f64 },

    #[error("no branch carries amplitude at x0 = {x0}")]
    DeadZone { x0: f64 },

    #[error("carrier branch amplitude vanished at x = {x}, t = {t}")]
    CarrierNode { x: f64, t: f64 },

    #[error("branch terminated at t = {t}: {reason}")]
    BranchTerminated { t: f64, reason: String },

    #[error("no common period between the orbits: {0} vs {1}")]
    NoCommonPeriod(f64, f64),

    #[error("configuration error{}: {message}", location.as_ref().map(|l| format!(" at {l}")).unwrap_or_default())]
    Config { location: Option<String>, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn ensure(cond: bool, name: &'static str, reason: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, reason: reason() })
    }
}
