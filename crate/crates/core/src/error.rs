use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("degenerate model: mass matrix condition number {condition:e} exceeds {limit:e}")]
    DegenerateModel { condition: f64, limit: f64 },

    #[error("inverse kinematics did not converge after {iterations} iterations (position error {position_error:e} m, orientation error {orientation_error:e} rad)")]
    MaxIterations {
        iterations: usize,
        position_error: f64,
        orientation_error: f64,
    },

    #[error("grasp infeasible: first waypoint unreachable ({0})")]
    Infeasible(String),

    #[error("trajectory has no motion; direction-dependent metric undefined")]
    NoMotion,

    #[error("no feasible grasps to rank")]
    NoFeasibleGrasps,

    #[error("{path}: {message}")]
    Schema { path: String, message: String },

    #[error("parse error in {file}: {source}")]
    Parse {
        file: String,
        #[source]
        source: serde_json::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
