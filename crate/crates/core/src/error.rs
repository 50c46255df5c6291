use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// The point lies on (or within the guard radius of) the target's vertical axis,
    /// where the cylindrical angle and the Jacobian inverse are undefined.
    #[error("point within {guard:e} m of the target axis (planar distance {planar_distance:e} m)")]
    AxisSingularity { planar_distance: f64, guard: f64 },

    #[error("{active} robot(s) with positive utility; at least 2 are required")]
    TooFewActive { active: usize },

    #[error("robots {first} and {second} share an angular position (gap {gap:e} rad)")]
    DegenerateGap { first: usize, second: usize, gap: f64 },

    #[error("state component exceeded {limit:e} or became non-finite")]
    NumericalBlowup { limit: f64 },

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("certificate failure: {check} residual {residual:e} exceeds {tolerance:e}")]
    CertificateFailure {
        check: &'static str,
        residual: f64,
        tolerance: f64,
    },

    #[error("insufficient data: {usable} usable samples, need at least {required}")]
    InsufficientData { usable: usize, required: usize },

    #[error("at t = {time:.6} s: {source}")]
    AtTime {
        time: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at(self, time: f64) -> Self {
        match self {
            e @ Error::AtTime { .. } => e,
            e => Error::AtTime {
                time,
                source: Box::new(e),
            },
        }
    }

    /// The underlying error with any timestamp wrapper removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtTime { source, .. } => source.root(),
            e => e,
        }
    }
}
