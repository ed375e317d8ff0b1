//! Serial kinematic chains described URDF-style: every joint has an origin
//! pose relative to its parent link and an axis in its own frame.

use nalgebra::{DMatrix, DVector, Matrix3, SymmetricEigen, Vector3};

use crate::error::{Error, Result};
use crate::geometry::{Pose, Rotation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointKind {
    Revolute,
    Prismatic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointSpec {
    pub kind: JointKind,
    /// Unit axis expressed in the joint frame.
    pub axis: Vector3<f64>,
    /// Parent-link frame to joint frame at zero displacement.
    pub origin: Pose,
    /// `[min, max]` in rad or m.
    pub limits: [f64; 2],
    pub velocity_limit: f64,
}

impl JointSpec {
    pub fn revolute(axis: Vector3<f64>, origin: Pose) -> Self {
        Self {
            kind: JointKind::Revolute,
            axis,
            origin,
            limits: [-std::f64::consts::PI, std::f64::consts::PI],
            velocity_limit: 2.0,
        }
    }

    pub fn prismatic(axis: Vector3<f64>, origin: Pose) -> Self {
        Self {
            kind: JointKind::Prismatic,
            axis,
            origin,
            limits: [-1.0, 1.0],
            velocity_limit: 1.0,
        }
    }

    pub fn with_limits(mut self, min: f64, max: f64) -> Self {
        self.limits = [min, max];
        self
    }

    fn motion(&self, q: f64) -> Pose {
        match self.kind {
            JointKind::Revolute => Pose::from_rotation(Rotation::from_axis_angle(&self.axis, q)),
            JointKind::Prismatic => Pose::new(Rotation::identity(), self.axis * q),
        }
    }

    pub fn mid_range(&self) -> f64 {
        0.5 * (self.limits[0] + self.limits[1])
    }

    pub fn clamp(&self, q: f64) -> f64 {
        q.clamp(self.limits[0], self.limits[1])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkSpec {
    pub mass: f64,
    /// CoM in the link (joint) frame.
    pub com: Vector3<f64>,
    /// Inertia about the CoM, link-frame axes.
    pub inertia: Matrix3<f64>,
}

impl LinkSpec {
    pub fn point_mass(mass: f64, com: Vector3<f64>) -> Self {
        Self {
            mass,
            com,
            inertia: Matrix3::zeros(),
        }
    }

    pub fn massless() -> Self {
        Self::point_mass(0.0, Vector3::zeros())
    }
}

/// Checks that `inertia` is a physically realizable rotational inertia:
/// symmetric, PSD and satisfying the triangle inequalities on its principal
/// moments.
pub fn validate_inertia_tensor(inertia: &Matrix3<f64>) -> std::result::Result<(), String> {
    let scale = inertia.amax().max(1e-12);
    let tol = 1e-9 * scale;
    if inertia.iter().any(|v| !v.is_finite()) {
        return Err("inertia has non-finite entries".into());
    }
    if (inertia - inertia.transpose()).amax() > tol {
        return Err("inertia tensor is not symmetric".into());
    }
    let eig = SymmetricEigen::new(*inertia).eigenvalues;
    if eig.min() < -tol {
        return Err(format!("inertia tensor has negative eigenvalue {:e}", eig.min()));
    }
    let (a, b, c) = (eig[0], eig[1], eig[2]);
    if a + b < c - tol || a + c < b - tol || b + c < a - tol {
        return Err("principal moments violate the triangle inequality".into());
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub joint: JointSpec,
    pub link: LinkSpec,
}

/// World-frame geometry of every joint at one configuration.
#[derive(Debug, Clone)]
pub struct ChainFrames {
    /// Frame of link `i` (after the joint displacement).
    pub links: Vec<Pose>,
    /// Joint axis in world coordinates.
    pub axes: Vec<Vector3<f64>>,
    /// Joint frame origin in world coordinates.
    pub origins: Vec<Vector3<f64>>,
    /// Operational point.
    pub tool: Pose,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainModel {
    pub name: String,
    pub base_pose: Pose,
    segments: Vec<Segment>,
    pub tool_transform: Pose,
}

impl ChainModel {
    pub fn new(
        name: impl Into<String>,
        base_pose: Pose,
        segments: Vec<Segment>,
        tool_transform: Pose,
    ) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidModel("chain needs at least one joint".into()));
        }
        let mut segments = segments;
        for (i, seg) in segments.iter_mut().enumerate() {
            let n = seg.joint.axis.norm();
            if !n.is_finite() || (n - 1.0).abs() > 1e-6 {
                return Err(Error::Schema {
                    path: format!("joints[{i}].axis"),
                    message: format!("axis must have unit norm (got {n})"),
                });
            }
            seg.joint.axis /= n;
            let [lo, hi] = seg.joint.limits;
            if !(lo < hi) {
                return Err(Error::Schema {
                    path: format!("joints[{i}].limits"),
                    message: format!("min {lo} must be below max {hi}"),
                });
            }
            if !(seg.joint.velocity_limit > 0.0) {
                return Err(Error::Schema {
                    path: format!("joints[{i}].velocity_limit"),
                    message: "must be positive".into(),
                });
            }
            if !(seg.link.mass >= 0.0) || !seg.link.mass.is_finite() {
                return Err(Error::Schema {
                    path: format!("links[{i}].mass"),
                    message: format!("mass must be finite and non-negative (got {})", seg.link.mass),
                });
            }
            if seg.link.com.iter().any(|v| !v.is_finite()) {
                return Err(Error::Schema {
                    path: format!("links[{i}].com"),
                    message: "non-finite CoM".into(),
                });
            }
            validate_inertia_tensor(&seg.link.inertia).map_err(|message| Error::Schema {
                path: format!("links[{i}].inertia"),
                message,
            })?;
            // store exactly symmetric
            seg.link.inertia = (seg.link.inertia + seg.link.inertia.transpose()) * 0.5;
        }
        Ok(Self {
            name: name.into(),
            base_pose,
            segments,
            tool_transform,
        })
    }

    pub fn dof(&self) -> usize {
        self.segments.len()
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn joints(&self) -> impl Iterator<Item = &JointSpec> {
        self.segments.iter().map(|s| &s.joint)
    }

    pub fn links(&self) -> impl Iterator<Item = &LinkSpec> {
        self.segments.iter().map(|s| &s.link)
    }

    /// Copy with a different base pose.
    pub fn with_base_pose(&self, base_pose: Pose) -> Self {
        let mut m = self.clone();
        m.base_pose = base_pose;
        m
    }

    pub fn mid_range(&self) -> DVector<f64> {
        DVector::from_iterator(self.dof(), self.joints().map(JointSpec::mid_range))
    }

    pub fn clamp_to_limits(&self, q: &mut DVector<f64>) -> bool {
        let mut clamped = false;
        for (qi, j) in q.iter_mut().zip(self.joints()) {
            let c = j.clamp(*qi);
            if c != *qi {
                clamped = true;
                *qi = c;
            }
        }
        clamped
    }

    pub fn within_limits(&self, q: &DVector<f64>) -> bool {
        q.iter()
            .zip(self.joints())
            .all(|(qi, j)| *qi >= j.limits[0] && *qi <= j.limits[1])
    }

    pub(crate) fn check_dim(&self, v: &DVector<f64>) -> Result<()> {
        if v.len() != self.dof() {
            return Err(Error::DimensionMismatch {
                expected: self.dof(),
                got: v.len(),
            });
        }
        Ok(())
    }

    pub fn frames(&self, q: &DVector<f64>) -> Result<ChainFrames> {
        self.check_dim(q)?;
        let n = self.dof();
        let mut links = Vec::with_capacity(n);
        let mut axes = Vec::with_capacity(n);
        let mut origins = Vec::with_capacity(n);
        let mut parent = self.base_pose;
        for (seg, &qi) in self.segments.iter().zip(q.iter()) {
            let pre = parent.compose(&seg.joint.origin);
            axes.push(pre.rotation.apply(&seg.joint.axis));
            origins.push(pre.translation);
            let frame = pre.compose(&seg.joint.motion(qi));
            links.push(frame);
            parent = frame;
        }
        let tool = parent.compose(&self.tool_transform);
        Ok(ChainFrames {
            links,
            axes,
            origins,
            tool,
        })
    }

    /// World pose of the operational point.
    pub fn forward_kinematics(&self, q: &DVector<f64>) -> Result<Pose> {
        Ok(self.frames(q)?.tool)
    }

    /// 6×n world-frame Jacobian of the operational point, rows `(v; ω)`.
    pub fn geometric_jacobian(&self, q: &DVector<f64>) -> Result<DMatrix<f64>> {
        let frames = self.frames(q)?;
        Ok(jacobian_from_frames(self, &frames, &frames.tool.translation))
    }
}

/// Jacobian of the world-frame twist of a point rigidly attached to the last
/// link.
pub(crate) fn jacobian_from_frames(
    model: &ChainModel,
    frames: &ChainFrames,
    point: &Vector3<f64>,
) -> DMatrix<f64> {
    let n = model.dof();
    let mut j = DMatrix::zeros(6, n);
    for (i, seg) in model.segments.iter().enumerate() {
        let z = frames.axes[i];
        match seg.joint.kind {
            JointKind::Revolute => {
                let v = z.cross(&(point - frames.origins[i]));
                j.fixed_view_mut::<3, 1>(0, i).copy_from(&v);
                j.fixed_view_mut::<3, 1>(3, i).copy_from(&z);
            }
            JointKind::Prismatic => {
                j.fixed_view_mut::<3, 1>(0, i).copy_from(&z);
            }
        }
    }
    j
}
