use thiserror::Error;

/// Failures raised by the physics and numerics layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate geometry: mirror-plane radius is {0}")]
    DegenerateGeometry(f64),

    #[error("pre- and post-selected states are orthogonal")]
    OrthogonalSelection,

    #[error("post-selection probability vanishes (denominator {denominator:e})")]
    VanishingPostSelection { denominator: f64 },

    #[error("beam profile is not even; use the general moment formula")]
    EvennessViolation,

    #[error("{what} did not converge (achieved error estimate {error_estimate:e})")]
    NumericalFailure { what: &'static str, error_estimate: f64 },

    #[error("oracle grid too coarse: relative error estimate {estimate:e} at {points} points")]
    ResolutionFailure { estimate: f64, points: usize },

    #[error("linear theory diverges at phi = 0 mod 2pi")]
    LinearDivergence,

    #[error("amplification factor undefined for k = 0")]
    UndefinedAmplification,

    #[error("optimal phase undefined: <cos 2kx> = {cos2k} is not below 1")]
    DegenerateOptimum { cos2k: f64 },

    #[error("displacement {requested:e} m exceeds the monotone-branch maximum {maximum:e} m")]
    NotInvertible { requested: f64, maximum: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
