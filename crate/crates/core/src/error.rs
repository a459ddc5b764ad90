use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("ellipticity violated for {field}: minimum {min:.3e} at x = {at:?}")]
    EllipticityViolation {
        field: &'static str,
        min: f64,
        at: Vec<f64>,
    },
    #[error("negative absorption a = {value:.3e} at x = {at:?}")]
    NegativeAbsorption { value: f64, at: Vec<f64> },
    #[error("periodic damping a_p vanishes identically (max {max:.3e}); b_h would be zero")]
    ZeroDamping { max: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("coefficient {field} has a finite-difference slope {slope:.3e} above {bound:.3e}")]
    RoughCoefficient {
        field: &'static str,
        slope: f64,
        bound: f64,
    },
    #[error("decay bound violated for {field}: |value| = {value:.3e} > C<x>^-rho = {bound:.3e}")]
    DecayBoundViolation {
        field: &'static str,
        value: f64,
        bound: f64,
    },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid medium configuration: {0}")]
    InvalidConfig(String),

    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("singular cell operator")]
    SingularOperator,
    #[error("resolution mismatch: {0}")]
    ResolutionMismatch(String),

    #[error("coefficient spectrum not resolved at cutoff {cutoff}: tail fraction {tail:.3e}")]
    AliasingError { cutoff: usize, tail: f64 },
    #[error("eigensolver failure: {0}")]
    EigensolverFailure(String),
    #[error("pencil nearly singular at z = {z}: condition estimate {condition:.3e}")]
    NearSingular { z: Complex64, condition: f64 },
    #[error("band crossing near sigma = {sigma:?}: second eigenvalue at distance {distance:.3e}")]
    BandCrossing { sigma: Vec<f64>, distance: f64 },
    #[error("lost track of the first band at sigma = {sigma:?}: {reason}")]
    LostTracking { sigma: Vec<f64>, reason: String },
    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("step underflow: p drift {drift:.3e} persists at dt = {dt:.3e}")]
    StepUnderflow { dt: f64, drift: f64 },
    #[error("empty ensemble")]
    EmptyEnsemble,
    #[error("invalid phase point: {0}")]
    InvalidPhasePoint(String),

    #[error("time step {dt:.3e} exceeds the CFL limit {limit:.3e}")]
    CflViolation { dt: f64, limit: f64 },
    #[error("non-finite state at t = {t}")]
    NonFiniteState { t: f64 },
    #[error("grid incompatibility: {0}")]
    GridIncompatibility(String),
    #[error("band data unavailable at sigma = {sigma:?}")]
    BandUnavailable { sigma: Vec<f64> },

    #[error("non-positive value {value:.3e} at t = {t} in fit window")]
    NonPositiveValues { t: f64, value: f64 },
    #[error("fit window too short: {points} points spanning {decades:.3} decades")]
    WindowTooShort { points: usize, decades: f64 },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("weight constraint violated: {0}")]
    ConstraintViolation(String),
}

impl Error {
    /// Module that raised the error, for diagnostics.
    pub fn module(&self) -> &'static str {
        use Error::*;
        match self {
            EllipticityViolation { .. }
            | NegativeAbsorption { .. }
            | ZeroDamping { .. }
            | DimensionMismatch { .. }
            | RoughCoefficient { .. }
            | DecayBoundViolation { .. }
            | InvalidGrid(_)
            | InvalidConfig(_) => "medium",
            NoConvergence { .. } | SingularOperator | ResolutionMismatch(_) => "homogenize",
            AliasingError { .. }
            | EigensolverFailure(_)
            | NearSingular { .. }
            | BandCrossing { .. }
            | LostTracking { .. }
            | InsufficientSamples(_) => "bloch",
            StepUnderflow { .. } | EmptyEnsemble | InvalidPhasePoint(_) => "flow",
            CflViolation { .. } | NonFiniteState { .. } | GridIncompatibility(_) | BandUnavailable { .. } => "evolve",
            NonPositiveValues { .. } | WindowTooShort { .. } | GridMismatch(_) | ConstraintViolation(_) => "analysis",
        }
    }

    /// True for errors caused by the input description rather than numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::EllipticityViolation { .. }
                | Error::NegativeAbsorption { .. }
                | Error::ZeroDamping { .. }
                | Error::DimensionMismatch { .. }
                | Error::RoughCoefficient { .. }
                | Error::DecayBoundViolation { .. }
                | Error::InvalidGrid(_)
                | Error::InvalidConfig(_)
                | Error::ConstraintViolation(_)
                | Error::CflViolation { .. }
        )
    }
}
