use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point is not in the open domain (phi = {phi:e})")]
    NotInterior { phi: f64 },

    #[error("point is not on the boundary (|phi| = {phi:e})")]
    NotOnSurface { phi: f64 },

    #[error("zero velocity has no backward exit")]
    ZeroVelocity,

    #[error("degenerate ray: {0}")]
    RayDegenerate(String),

    #[error("root finding did not converge: {0}")]
    NoConvergence(String),

    #[error("gradient of the defining function vanishes at the query point")]
    DegenerateGradient,

    #[error("non-positive principal curvature {0:e}")]
    CurvatureDegenerate(f64),

    #[error("adaptive quadrature hit the depth cap on [{a}, {b}]")]
    QuadratureFailure { a: f64, b: f64 },

    #[error("kernel is singular at coincident velocities")]
    CoincidentVelocities,

    #[error("iterate depth {depth} needs ~{needed:e} evaluations, budget is {budget:e}")]
    BudgetExceeded { depth: usize, needed: f64, budget: f64 },

    #[error("unknown check `{0}`")]
    UnknownCheck(String),

    #[error("resolution too coarse: {0}")]
    ResolutionInsufficient(String),

    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
