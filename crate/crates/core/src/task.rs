//! Object trajectories, grasp candidates and the grasped object's inertia.

use nalgebra::{Matrix3, Vector3};

use crate::chain::validate_inertia_tensor;
use crate::error::{Error, Result};
use crate::geometry::{transform_spatial_inertia, Pose, SpatialInertia};

/// Timed sequence of object-CoM poses. Times start at 0 and strictly increase.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskTrajectory {
    times: Vec<f64>,
    poses: Vec<Pose>,
}

impl TaskTrajectory {
    pub fn new(times: Vec<f64>, poses: Vec<Pose>) -> Result<Self> {
        if times.len() != poses.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                got: poses.len(),
            });
        }
        if times.len() < 2 {
            return Err(Error::InvalidInput("a trajectory needs at least 2 waypoints".into()));
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidInput(format!(
                "trajectory must start at t = 0 (got {})",
                times[0]
            )));
        }
        if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("waypoint times must strictly increase".into()));
        }
        Ok(Self { times, poses })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn poses(&self) -> &[Pose] {
        &self.poses
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn total_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Same geometry, new timestamps.
    pub fn retimed(&self, times: Vec<f64>) -> Result<Self> {
        Self::new(times, self.poses.clone())
    }

    /// Same timestamps, every pose pre-multiplied by `frame`.
    pub fn transformed(&self, frame: &Pose) -> Self {
        Self {
            times: self.times.clone(),
            poses: self.poses.iter().map(|p| frame.compose(p)).collect(),
        }
    }

    /// Uniformly resamples `count` waypoints over `[0, total_time]`.
    /// Keyframe times are first scaled so the last keyframe lands on
    /// `total_time`; translations are interpolated linearly and rotations by
    /// slerp.
    pub fn resample(&self, count: usize, total_time: f64) -> Result<Self> {
        if count < 2 {
            return Err(Error::InvalidInput("resample count must be at least 2".into()));
        }
        if !(total_time > 0.0) {
            return Err(Error::InvalidInput("total time must be positive".into()));
        }
        let scale = total_time / self.total_time();
        let keys: Vec<f64> = self.times.iter().map(|t| t * scale).collect();
        let mut times = Vec::with_capacity(count);
        let mut poses = Vec::with_capacity(count);
        let mut seg = 0;
        for i in 0..count {
            let t = if i + 1 == count {
                total_time
            } else {
                total_time * i as f64 / (count - 1) as f64
            };
            while seg + 2 < keys.len() && t > keys[seg + 1] {
                seg += 1;
            }
            let (t0, t1) = (keys[seg], keys[seg + 1]);
            let u = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
            times.push(t);
            poses.push(self.poses[seg].interpolate(&self.poses[seg + 1], u));
        }
        Self::new(times, poses)
    }
}

/// Fixed object-to-gripper transform `ᵒT_g`.
#[derive(Debug, Clone, PartialEq)]
pub struct GraspCandidate {
    pub id: String,
    pub object_to_gripper: Pose,
}

impl GraspCandidate {
    pub fn new(id: impl Into<String>, object_to_gripper: Pose) -> Self {
        Self {
            id: id.into(),
            object_to_gripper,
        }
    }

    /// Object inertia expressed at the gripper frame, `E⁻ᵀ M_o E⁻¹` with
    /// `E` the velocity transform from the object CoM frame to the gripper.
    pub fn payload_inertia(&self, object: &RigidObject) -> SpatialInertia {
        transform_spatial_inertia(&object.spatial_inertia(), &self.object_to_gripper.inverse())
    }
}

/// Rigid payload with its CoM at the object frame origin.
#[derive(Debug, Clone, PartialEq)]
pub struct RigidObject {
    pub mass: f64,
    /// About the CoM, object-frame axes.
    pub inertia: Matrix3<f64>,
    pub extents: Option<[f64; 3]>,
}

impl RigidObject {
    pub fn new(mass: f64, inertia: Matrix3<f64>) -> Result<Self> {
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::InvalidInput(format!("object mass must be positive (got {mass})")));
        }
        validate_inertia_tensor(&inertia).map_err(Error::InvalidInput)?;
        if SpatialInertia::at_com(mass, &inertia)
            .matrix()
            .symmetric_eigenvalues()
            .min()
            <= 0.0
        {
            return Err(Error::InvalidInput("object inertia must be positive definite".into()));
        }
        Ok(Self {
            mass,
            inertia: (inertia + inertia.transpose()) * 0.5,
            extents: None,
        })
    }

    /// Uniform-density box with edge lengths `extents` along the object axes.
    pub fn uniform_cuboid(mass: f64, extents: [f64; 3]) -> Result<Self> {
        let [a, b, c] = extents;
        let k = mass / 12.0;
        let inertia = Matrix3::from_diagonal(&Vector3::new(
            k * (b * b + c * c),
            k * (a * a + c * c),
            k * (a * a + b * b),
        ));
        let mut obj = Self::new(mass, inertia)?;
        obj.extents = Some(extents);
        Ok(obj)
    }

    pub fn spatial_inertia(&self) -> SpatialInertia {
        SpatialInertia::at_com(self.mass, &self.inertia)
    }

    /// Mass and inertia multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let mut o = Self::new(self.mass * factor, self.inertia * factor)?;
        o.extents = self.extents;
        Ok(o)
    }
}

/// Gripper poses along the task: `ʳT_g(tᵢ) = ʳT_o(tᵢ) · ᵒT_g`.
pub fn gripper_trajectory(task: &TaskTrajectory, grasp: &GraspCandidate) -> TaskTrajectory {
    TaskTrajectory {
        times: task.times.clone(),
        poses: task
            .poses
            .iter()
            .map(|p| p.compose(&grasp.object_to_gripper))
            .collect(),
    }
}

/// Normalized arc length of the object translation at every waypoint. A path
/// with no translation falls back to the uniform grid `i/(N−1)`.
pub fn path_parameter(task: &TaskTrajectory) -> Vec<f64> {
    let n = task.len();
    let mut s = Vec::with_capacity(n);
    s.push(0.0);
    let mut acc = 0.0;
    for w in task.poses.windows(2) {
        acc += (w[1].translation - w[0].translation).norm();
        s.push(acc);
    }
    if acc <= 0.0 {
        return uniform_parameter(n);
    }
    for v in &mut s {
        *v /= acc;
    }
    s[n - 1] = 1.0;
    s
}

/// `sᵢ = i/(N−1)`.
pub fn uniform_parameter(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

/// `count` grasps with translations evenly spaced from `start` to `end` and
/// the orientation of `start`.
pub fn generate_grasp_sweep(start: &Pose, end: &Pose, count: usize) -> Result<Vec<GraspCandidate>> {
    if count < 2 {
        return Err(Error::InvalidInput(format!(
            "grasp sweep needs at least 2 grasps (got {count})"
        )));
    }
    Ok((0..count)
        .map(|i| {
            let u = i as f64 / (count - 1) as f64;
            let t = start.translation + (end.translation - start.translation) * u;
            GraspCandidate::new(format!("g{}", i + 1), Pose::new(start.rotation, t))
        })
        .collect())
}
