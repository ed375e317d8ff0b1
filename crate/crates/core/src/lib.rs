//! Kinematic and dynamic evaluation of candidate grasps over a post-grasp
//! object trajectory.
//!
//! A serial arm is tracked along the gripper path implied by each grasp, and
//! three scalar scores are integrated over the path: task-oriented
//! manipulability (TOV), torque effort (TME) and effective mass along the
//! direction of motion (TEM). The scores are then compared through Pareto
//! dominance and an optional weighted sum.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod ik;
pub mod io;
pub mod metrics;
pub mod ranking;
pub mod task;

pub use chain::{ChainModel, JointKind, JointSpec, LinkSpec};
pub use error::{Error, Result};
pub use geometry::{velocity_transform, Pose, Rotation, SpatialInertia, Twist, VelocityTransform};
pub use ik::{IkSettings, JointTrajectory, TaskSpace};
pub use metrics::{evaluate_grasp, evaluate_grasps, EvaluationSettings, GraspScorecard, Quadrature};
pub use ranking::{detect_conflict, normalize, pareto_front, scalarize, GraspScores, Weights};
pub use task::{GraspCandidate, RigidObject, TaskTrajectory};
