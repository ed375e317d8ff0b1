//! Rigid-body algebra: rotations, poses, twists and the velocity transform
//! used to move spatial inertias between frames.
//!
//! Twists are ordered `(linear; angular)` everywhere in this crate. For a pose
//! `T` describing frame `c` in frame `a`, [`velocity_transform`] returns
//! `E(T) = [R, [t]ₓR; 0, R]`, the map taking a twist of a rigid body expressed
//! at `c` into the same motion expressed at `a`.

use nalgebra::{Matrix3, Matrix6, Quaternion, UnitQuaternion, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Skew-symmetric cross-product matrix, `skew(a) * b == a × b`.
pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Unit quaternion with the double cover resolved to `w >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(UnitQuaternion<f64>);

impl Rotation {
    pub fn identity() -> Self {
        Rotation(UnitQuaternion::identity())
    }

    /// Builds a rotation from `[w, x, y, z]`, normalizing the input. Inputs
    /// already unit to within a few ulps are kept bit for bit, so parsing a
    /// serialized rotation reproduces it exactly.
    pub fn from_wxyz(w: f64, x: f64, y: f64, z: f64) -> Result<Self> {
        let q = Quaternion::new(w, x, y, z);
        let n = q.norm();
        if !n.is_finite() || n < 1e-12 {
            return Err(Error::InvalidInput(format!(
                "quaternion [{w}, {x}, {y}, {z}] cannot be normalized"
            )));
        }
        if (n - 1.0).abs() <= 4.0 * f64::EPSILON {
            return Ok(Self::from_unit(UnitQuaternion::new_unchecked(q)));
        }
        Ok(Self::from_unit(UnitQuaternion::new_normalize(q)))
    }

    pub fn from_unit(q: UnitQuaternion<f64>) -> Self {
        let q = if q.w < 0.0 {
            UnitQuaternion::new_unchecked(-q.into_inner())
        } else {
            q
        };
        Rotation(q)
    }

    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Self {
        match nalgebra::Unit::try_new(*axis, 1e-15) {
            Some(a) => Self::from_unit(UnitQuaternion::from_axis_angle(&a, angle)),
            None => Self::identity(),
        }
    }

    /// Rotation from a rotation vector (axis times angle).
    pub fn from_scaled_axis(v: &Vector3<f64>) -> Self {
        Self::from_unit(UnitQuaternion::from_scaled_axis(*v))
    }

    pub fn from_matrix(m: &Matrix3<f64>) -> Self {
        let rot = nalgebra::Rotation3::from_matrix_unchecked(*m);
        Self::from_unit(UnitQuaternion::from_rotation_matrix(&rot))
    }

    pub fn rot_x(angle: f64) -> Self {
        Self::from_axis_angle(&Vector3::x(), angle)
    }

    pub fn rot_y(angle: f64) -> Self {
        Self::from_axis_angle(&Vector3::y(), angle)
    }

    pub fn rot_z(angle: f64) -> Self {
        Self::from_axis_angle(&Vector3::z(), angle)
    }

    /// `[w, x, y, z]`
    pub fn wxyz(&self) -> [f64; 4] {
        let q = self.0.quaternion();
        [q.w, q.i, q.j, q.k]
    }

    pub fn quaternion(&self) -> &UnitQuaternion<f64> {
        &self.0
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        self.0.to_rotation_matrix().into_inner()
    }

    pub fn compose(&self, other: &Rotation) -> Rotation {
        Self::from_unit(self.0 * other.0)
    }

    pub fn inverse(&self) -> Rotation {
        Self::from_unit(self.0.inverse())
    }

    pub fn apply(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.0 * v
    }

    /// Rotation vector (axis times angle, angle in `[0, π]`).
    pub fn log(&self) -> Vector3<f64> {
        self.0.scaled_axis()
    }

    pub fn angle(&self) -> f64 {
        self.0.angle()
    }

    /// Spherical interpolation along the shortest arc.
    pub fn slerp(&self, other: &Rotation, t: f64) -> Rotation {
        match self.0.try_slerp(&other.0, t, 1e-12) {
            Some(q) => Self::from_unit(q),
            // antipodal or identical: fall back to the geodesic through the log map
            None => {
                let rel = self.inverse().compose(other).log();
                self.compose(&Rotation::from_scaled_axis(&(rel * t)))
            }
        }
    }
}

impl Default for Rotation {
    fn default() -> Self {
        Self::identity()
    }
}

/// Element of SE(3): `x ↦ R x + t`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pose {
    pub rotation: Rotation,
    pub translation: Vector3<f64>,
}

impl Pose {
    pub fn new(rotation: Rotation, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn identity() -> Self {
        Self::default()
    }

    pub fn from_translation(x: f64, y: f64, z: f64) -> Self {
        Self::new(Rotation::identity(), Vector3::new(x, y, z))
    }

    pub fn from_rotation(rotation: Rotation) -> Self {
        Self::new(rotation, Vector3::zeros())
    }

    /// `self ∘ other`: rotation `Ra·Rb`, translation `ta + Ra·tb`.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation.compose(&other.rotation),
            translation: self.translation + self.rotation.apply(&other.translation),
        }
    }

    pub fn inverse(&self) -> Pose {
        let r_inv = self.rotation.inverse();
        Pose {
            rotation: r_inv,
            translation: -r_inv.apply(&self.translation),
        }
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.translation + self.rotation.apply(p)
    }

    /// Homogeneous 4×4 matrix.
    pub fn matrix(&self) -> nalgebra::Matrix4<f64> {
        let mut m = nalgebra::Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0)
            .copy_from(&self.rotation.matrix());
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    /// Displacement from `self` to `other` as a world-frame 6-vector:
    /// `(t_other − t_self; log(R_other R_selfᵀ))`.
    pub fn displacement_to(&self, other: &Pose) -> Vector6<f64> {
        let dp = other.translation - self.translation;
        let dr = other.rotation.compose(&self.rotation.inverse()).log();
        Vector6::new(dp.x, dp.y, dp.z, dr.x, dr.y, dr.z)
    }

    /// Linear interpolation of translation and slerp of rotation.
    pub fn interpolate(&self, other: &Pose, t: f64) -> Pose {
        Pose {
            rotation: self.rotation.slerp(&other.rotation, t),
            translation: self.translation + (other.translation - self.translation) * t,
        }
    }
}

/// Linear and angular velocity of a frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Twist {
    pub linear: Vector3<f64>,
    pub angular: Vector3<f64>,
}

impl Twist {
    pub fn new(linear: Vector3<f64>, angular: Vector3<f64>) -> Self {
        Self { linear, angular }
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        Self {
            linear: v.fixed_rows::<3>(0).into_owned(),
            angular: v.fixed_rows::<3>(3).into_owned(),
        }
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        Vector6::new(
            self.linear.x,
            self.linear.y,
            self.linear.z,
            self.angular.x,
            self.angular.y,
            self.angular.z,
        )
    }
}

/// 6×6 adjoint `[R, [t]ₓR; 0, R]` of a rigid transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityTransform(pub Matrix6<f64>);

impl VelocityTransform {
    pub fn matrix(&self) -> &Matrix6<f64> {
        &self.0
    }

    pub fn apply(&self, twist: &Twist) -> Twist {
        Twist::from_vector(&(self.0 * twist.to_vector()))
    }

    /// Closed-form inverse, `[Rᵀ, −Rᵀ[t]ₓ; 0, Rᵀ]`.
    pub fn inverse(&self) -> VelocityTransform {
        let r = self.0.fixed_view::<3, 3>(0, 0).into_owned();
        let tr = self.0.fixed_view::<3, 3>(0, 3).into_owned();
        let rt = r.transpose();
        let mut m = Matrix6::zeros();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&rt);
        m.fixed_view_mut::<3, 3>(3, 3).copy_from(&rt);
        // [t]R → −Rᵀ[t]R Rᵀ = −Rᵀ (tr) Rᵀ
        m.fixed_view_mut::<3, 3>(0, 3).copy_from(&(-rt * tr * rt));
        VelocityTransform(m)
    }
}

/// Adjoint of `pose`: maps a rigid-body twist expressed at the frame `pose`
/// describes into the same motion expressed at the reference frame.
pub fn velocity_transform(pose: &Pose) -> VelocityTransform {
    let r = pose.rotation.matrix();
    let mut m = Matrix6::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&r);
    m.fixed_view_mut::<3, 3>(3, 3).copy_from(&r);
    m.fixed_view_mut::<3, 3>(0, 3)
        .copy_from(&(skew(&pose.translation) * r));
    VelocityTransform(m)
}

/// Re-expresses a twist through `pose`'s adjoint.
pub fn transform_twist(pose: &Pose, twist: &Twist) -> Twist {
    velocity_transform(pose).apply(twist)
}

/// Block-diagonal `diag(R, R)`, used to rotate 6-vectors without shifting
/// their reference point.
pub fn rotation6(r: &Matrix3<f64>) -> Matrix6<f64> {
    let mut m = Matrix6::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(r);
    m.fixed_view_mut::<3, 3>(3, 3).copy_from(r);
    m
}

/// 6×6 spatial inertia in `(linear; angular)` ordering, such that the kinetic
/// energy of a body moving with twist `u` (taken at the reference point) is
/// `½ uᵀ M u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialInertia(Matrix6<f64>);

const SYMMETRY_TOL: f64 = 1e-9;

impl SpatialInertia {
    pub fn zero() -> Self {
        SpatialInertia(Matrix6::zeros())
    }

    /// Validates symmetry (absolute tolerance 1e-9, relative to the largest entry).
    pub fn from_matrix(m: Matrix6<f64>) -> Result<Self> {
        let scale = m.amax().max(1.0);
        let asym = (m - m.transpose()).amax();
        if !asym.is_finite() || asym > SYMMETRY_TOL * scale {
            return Err(Error::InvalidInput(format!(
                "spatial inertia is not symmetric (max asymmetry {asym:e})"
            )));
        }
        Ok(SpatialInertia(m))
    }

    /// Body of mass `mass` whose CoM sits at `com` (relative to the reference
    /// point) with inertia `inertia_com` about the CoM, all in one frame.
    pub fn from_body(mass: f64, com: &Vector3<f64>, inertia_com: &Matrix3<f64>) -> Self {
        let c = skew(com);
        let mut m = Matrix6::zeros();
        m.fixed_view_mut::<3, 3>(0, 0)
            .copy_from(&(Matrix3::identity() * mass));
        m.fixed_view_mut::<3, 3>(0, 3).copy_from(&(-c * mass));
        m.fixed_view_mut::<3, 3>(3, 0).copy_from(&(c * mass));
        m.fixed_view_mut::<3, 3>(3, 3)
            .copy_from(&(inertia_com - c * c * mass));
        SpatialInertia(m)
    }

    /// Block-diagonal `diag(m·I₃, I_com)`, the inertia about the body's own CoM.
    pub fn at_com(mass: f64, inertia_com: &Matrix3<f64>) -> Self {
        Self::from_body(mass, &Vector3::zeros(), inertia_com)
    }

    /// Splits into `(mass, com, inertia about com)`. The CoM is undefined for a
    /// massless body and reported as the origin.
    pub fn to_body(&self) -> (f64, Vector3<f64>, Matrix3<f64>) {
        let mass = self.0[(0, 0)];
        let rot = self.0.fixed_view::<3, 3>(3, 3).into_owned();
        if mass.abs() < 1e-300 {
            return (0.0, Vector3::zeros(), rot);
        }
        let c_skew = self.0.fixed_view::<3, 3>(3, 0).into_owned() / mass;
        let com = Vector3::new(c_skew[(2, 1)], c_skew[(0, 2)], c_skew[(1, 0)]);
        let c = skew(&com);
        (mass, com, rot + c * c * mass)
    }

    pub fn matrix(&self) -> &Matrix6<f64> {
        &self.0
    }

    pub fn mass(&self) -> f64 {
        self.0[(0, 0)]
    }

    pub fn scaled(&self, factor: f64) -> Self {
        SpatialInertia(self.0 * factor)
    }

    /// Rotates the frame the inertia is expressed in, keeping the reference
    /// point: `diag(R,R) M diag(R,R)ᵀ`.
    pub fn rotated(&self, r: &Matrix3<f64>) -> Self {
        let r6 = rotation6(r);
        SpatialInertia(r6 * self.0 * r6.transpose())
    }

    pub fn kinetic_energy(&self, twist: &Vector6<f64>) -> f64 {
        0.5 * twist.dot(&(self.0 * twist))
    }
}

impl std::ops::Add for SpatialInertia {
    type Output = SpatialInertia;
    fn add(self, rhs: SpatialInertia) -> SpatialInertia {
        SpatialInertia(self.0 + rhs.0)
    }
}

impl std::ops::AddAssign for SpatialInertia {
    fn add_assign(&mut self, rhs: SpatialInertia) {
        self.0 += rhs.0;
    }
}

/// Congruence `E⁻ᵀ M E⁻¹` with `E = velocity_transform(pose)`: the inertia,
/// originally expressed at the frame `pose` describes, re-expressed at the
/// reference frame of `pose`.
pub fn transform_spatial_inertia(inertia: &SpatialInertia, pose: &Pose) -> SpatialInertia {
    let e_inv = velocity_transform(pose).inverse().0;
    let m = e_inv.transpose() * inertia.0 * e_inv;
    // re-symmetrize round-off
    SpatialInertia((m + m.transpose()) * 0.5)
}

/// Raw serialization shape for a pose: translation in meters and `[w,x,y,z]`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PoseRecord {
    pub translation: [f64; 3],
    pub quaternion: [f64; 4],
}

impl PoseRecord {
    pub fn to_pose(&self) -> Result<Pose> {
        let [w, x, y, z] = self.quaternion;
        let t = self.translation;
        if t.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite translation".into()));
        }
        Ok(Pose::new(
            Rotation::from_wxyz(w, x, y, z)?,
            Vector3::new(t[0], t[1], t[2]),
        ))
    }
}

impl From<&Pose> for PoseRecord {
    fn from(p: &Pose) -> Self {
        PoseRecord {
            translation: [p.translation.x, p.translation.y, p.translation.z],
            quaternion: p.rotation.wxyz(),
        }
    }
}
