use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot take the exterior derivative of a top-degree form")]
    DegreeOverflow,
    #[error("metric is not positive definite at sample {index}")]
    DegenerateMetric { index: usize },
    #[error("Gram matrix is not positive definite at sample {index}")]
    NotDefinite { index: usize },
    #[error("matrix lies outside the local chart of the gauge inverse")]
    OutsideLocalChart,
    #[error("contraction ratio exceeded 1/2 for three consecutive iterations (ratio {ratio})")]
    NoContraction { ratio: f64 },
    #[error("singular point at {position:?} too close to the chart boundary or another sample")]
    SingularTooClose { position: [f64; 3] },
    #[error("need at least {needed} radii, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("boundary sphere of radius {radius} exits the chart")]
    BoundaryClipped { radius: f64 },
    #[error("conformal density is not positive at |zeta| = {radius}")]
    NotKahler { radius: f64 },
    #[error("matrix determinant is {det}, not 1")]
    NotUnimodular { det: f64 },
    #[error("Mobius denominator vanishes at tau")]
    PoleHit,
    #[error("trace {trace} lies within tolerance of |tr| = 2; classification is ambiguous")]
    AmbiguousTrace { trace: f64 },
    #[error("Hessian is not positive definite at sample {index}")]
    NotConvex { index: usize },
    #[error("Hessian determinant deviates from 1 by {deviation}")]
    NotNormalized { deviation: f64 },
    #[error("weight {delta} is within 1e-9 of the exceptional set")]
    ResonantWeight { delta: f64 },
    #[error("tail integral does not converge numerically")]
    TailDivergence,
    #[error("sample range shorter than one dyadic annulus")]
    InsufficientRange,
    #[error("envelope is only defined for modes with j > 0")]
    NoEnvelope,
    #[error("cone angle parameter {beta} is not in the admissible list")]
    InadmissibleAngle { beta: f64 },
    #[error("parameter {name} = {value} is outside the admissible range")]
    InadmissibleParameter { name: &'static str, value: f64 },
    #[error("volume growth exponent {kappa} +- {ci} straddles two families")]
    AmbiguousDimension { kappa: f64, ci: f64 },
    #[error("charts do not match: {0}")]
    ChartMismatch(&'static str),
    #[error("non-finite value produced at sample {index}")]
    NonFinite { index: usize },
    #[error("invalid chart: {0}")]
    InvalidChart(String),
    #[error("invalid parameter: {0}")]
    InvalidInput(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
