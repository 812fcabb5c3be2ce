use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SmkError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("unsupported spec: {0}")]
    UnsupportedSpec(String),
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("Laplace inversion did not converge{}: estimates {first} and {second} differ by {diff:.3e}", fmt_location(.location))]
    NonConvergence {
        location: Option<(usize, usize, usize)>,
        first: f64,
        second: f64,
        diff: f64,
    },
    #[error("singular linear system: {0}")]
    SingularSystem(String),
    #[error("path explosion: more than {cap} jumps before the horizon")]
    Explosion { cap: usize },
    #[error("time {t} is outside the recorded horizon [0, {horizon}]")]
    OutOfHorizon { t: f64, horizon: f64 },
    #[error("kernel unavailable: {0}")]
    KernelUnavailable(String),
    #[error("wrong law: {0}")]
    WrongLaw(String),
    #[error("boundary mass {mass:.3e} exceeds {limit:.1e}; enlarge the lattice")]
    BoundaryMass { mass: f64, limit: f64 },
}

fn fmt_location(loc: &Option<(usize, usize, usize)>) -> String {
    match loc {
        Some((k, i, j)) => format!(" at time index {k}, entry ({i},{j})"),
        None => String::new(),
    }
}

impl SmkError {
    /// Attach grid coordinates to a nonconvergence report.
    pub fn at_entry(self, k: usize, i: usize, j: usize) -> Self {
        match self {
            SmkError::NonConvergence {
                first,
                second,
                diff,
                ..
            } => SmkError::NonConvergence {
                location: Some((k, i, j)),
                first,
                second,
                diff,
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, SmkError>;
