//! Per-waypoint objectives along a post-grasp trajectory and their path
//! integrals:
//!
//! * task-oriented velocity manipulability, `a² = 1 / ūᵀ(JJᵀ)⁻¹ū`, maximized;
//! * torque effort, `‖τ‖²` with the grasped object in the dynamics, minimized;
//! * effective mass along the motion, `m_e = 1 / ūᵀΛ⁻¹ū`, minimized.
//!
//! Integrals use the trapezoid rule over the normalized arc length `s` of the
//! object path (or over the waypoint index in [`Quadrature::Index`] mode).

use nalgebra::{DMatrix, DVector, SymmetricEigen, Vector3, Vector6};
use rayon::prelude::*;

use crate::chain::ChainModel;
use crate::dynamics::{
    augmented_mass_matrix_with, inverse_dynamics, operational_mass_inverse_from, STANDARD_GRAVITY,
};
use crate::error::{Error, Result};
use crate::ik::{track_trajectory, IkSettings, JointTrajectory, TaskSpace};
use crate::task::{
    gripper_trajectory, path_parameter, uniform_parameter, GraspCandidate, RigidObject,
    TaskTrajectory,
};

/// Eigenvalues of `JJᵀ` below this are exact zeros.
pub const NULL_EIGENVALUE: f64 = 1e-12;
/// Squared component of `ū` in the null space above which `a² = 0`.
pub const NULL_COMPONENT: f64 = 1e-12;
/// `ūᵀΛ⁻¹ū` below this (kg⁻¹) counts as singular.
pub const SINGULAR_INVERSE_MASS: f64 = 1e-9;
/// Effective mass reported at singular directions (kg).
pub const EFFECTIVE_MASS_CAP: f64 = 1e9;

const UNIT_TOL: f64 = 1e-9;
const ZERO_MOTION: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Quadrature {
    /// Trapezoid over normalized arc length.
    #[default]
    ArcLength,
    /// Trapezoid over the uniform grid `i/(N−1)`.
    Index,
}

/// Direction along which the effective mass is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MassDirection {
    /// Translational tangent with zero angular part.
    #[default]
    Translational,
    /// Full 6D twist tangent.
    FullTwist,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaypointFlags {
    pub near_singular: bool,
    pub unreachable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricProfile {
    pub values: Vec<f64>,
    pub integral: f64,
    pub flags: Vec<WaypointFlags>,
}

impl MetricProfile {
    fn new(values: Vec<f64>, s: &[f64], near_singular: Vec<bool>, reachable: &[bool]) -> Self {
        let integral = trapezoid(&values, s);
        let flags = near_singular
            .into_iter()
            .zip(reachable)
            .map(|(near_singular, r)| WaypointFlags {
                near_singular,
                unreachable: !r,
            })
            .collect();
        Self {
            values,
            integral,
            flags,
        }
    }

    pub fn near_singular_count(&self) -> usize {
        self.flags.iter().filter(|f| f.near_singular).count()
    }
}

/// Trapezoid rule over the abscissae `s`.
pub fn trapezoid(values: &[f64], s: &[f64]) -> f64 {
    values
        .windows(2)
        .zip(s.windows(2))
        .map(|(v, x)| 0.5 * (v[0] + v[1]) * (x[1] - x[0]))
        .sum()
}

fn check_unit(u: &DVector<f64>) -> Result<()> {
    let n = u.norm();
    if (n - 1.0).abs() > UNIT_TOL {
        return Err(Error::InvalidInput(format!("direction must be unit length (norm {n})")));
    }
    Ok(())
}

/// Squared radius of the velocity manipulability ellipsoid `uᵀ(JJᵀ)⁻¹u = 1`
/// along `direction`. `jacobian` has one row per task coordinate.
pub fn directional_manipulability(jacobian: &DMatrix<f64>, direction: &DVector<f64>) -> Result<f64> {
    if direction.len() != jacobian.nrows() {
        return Err(Error::DimensionMismatch {
            expected: jacobian.nrows(),
            got: direction.len(),
        });
    }
    check_unit(direction)?;
    let jjt = jacobian * jacobian.transpose();
    let eig = SymmetricEigen::new(jjt);
    let mut quad = 0.0;
    let mut null = 0.0;
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        let c = eig.eigenvectors.column(k).dot(direction);
        if lambda < NULL_EIGENVALUE {
            null += c * c;
        } else {
            quad += c * c / lambda;
        }
    }
    if null > NULL_COMPONENT || quad <= 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 / quad)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveMass {
    pub value: f64,
    pub near_singular: bool,
}

/// Effective mass along `direction` (unit 6-vector, or unit 3-vector taken as
/// linear with zero angular part) from an operational-space inverse inertia.
pub fn effective_mass_along(inverse: &DMatrix<f64>, direction: &DVector<f64>) -> Result<EffectiveMass> {
    if direction.len() != 6 && direction.len() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 6,
            got: direction.len(),
        });
    }
    check_unit(direction)?;
    let mut u = DVector::zeros(6);
    u.rows_mut(0, direction.len()).copy_from(direction);
    let d = u.dot(&(inverse * &u));
    Ok(if d < SINGULAR_INVERSE_MASS {
        EffectiveMass {
            value: EFFECTIVE_MASS_CAP,
            near_singular: true,
        }
    } else {
        EffectiveMass {
            value: 1.0 / d,
            near_singular: false,
        }
    })
}

/// Mass perceived along `direction` by an impact on the operational point of
/// the arm holding `object` with `grasp`.
pub fn effective_mass(
    model: &ChainModel,
    q: &DVector<f64>,
    grasp: &GraspCandidate,
    object: &RigidObject,
    direction: &DVector<f64>,
) -> Result<EffectiveMass> {
    let m = augmented_mass_matrix_with(model, q, &grasp.payload_inertia(object))?;
    let inv = operational_mass_inverse_from(model, q, &m)?;
    effective_mass_along(&inv, direction)
}

/// Unit tangents of a pose sequence from central differences (one-sided at
/// the ends). `extract` picks the components that define the direction.
/// Waypoints without motion reuse the nearest moving neighbor.
fn tangents(
    trajectory: &TaskTrajectory,
    extract: impl Fn(&Vector6<f64>) -> DVector<f64>,
) -> Result<Vec<DVector<f64>>> {
    let poses = trajectory.poses();
    let n = poses.len();
    let raw: Vec<Option<DVector<f64>>> = (0..n)
        .map(|i| {
            let (a, b) = match i {
                0 => (0, 1),
                i if i == n - 1 => (n - 2, n - 1),
                i => (i - 1, i + 1),
            };
            let d = extract(&poses[a].displacement_to(&poses[b]));
            let norm = d.norm();
            (norm > ZERO_MOTION).then(|| d / norm)
        })
        .collect();
    if raw.iter().all(Option::is_none) {
        return Err(Error::NoMotion);
    }
    Ok((0..n)
        .map(|i| {
            if let Some(d) = &raw[i] {
                return d.clone();
            }
            (1..n)
                .find_map(|k| {
                    let back = i.checked_sub(k).and_then(|j| raw[j].clone());
                    back.or_else(|| raw.get(i + k).cloned().flatten())
                })
                .expect("at least one moving waypoint")
        })
        .collect())
}

fn twist_tangents(trajectory: &TaskTrajectory, space: TaskSpace) -> Result<Vec<DVector<f64>>> {
    let rows = space.rows();
    tangents(trajectory, |d| DVector::from_iterator(rows, d.iter().copied().take(rows)))
}

fn translational_tangents(trajectory: &TaskTrajectory) -> Result<Vec<DVector<f64>>> {
    tangents(trajectory, |d| {
        let v: Vector3<f64> = d.fixed_rows::<3>(0).into_owned();
        DVector::from_column_slice(v.as_slice())
    })
}

fn abscissae(task: &TaskTrajectory, quadrature: Quadrature) -> Vec<f64> {
    match quadrature {
        Quadrature::ArcLength => path_parameter(task),
        Quadrature::Index => uniform_parameter(task.len()),
    }
}

fn check_lengths(joints: &JointTrajectory, n: usize, s: &[f64]) -> Result<()> {
    if joints.len() != n || s.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: joints.len().min(s.len()),
        });
    }
    Ok(())
}

/// Task-oriented velocity manipulability along the gripper path.
pub fn tov(
    model: &ChainModel,
    joints: &JointTrajectory,
    gripper: &TaskTrajectory,
    s: &[f64],
    space: TaskSpace,
) -> Result<MetricProfile> {
    check_lengths(joints, gripper.len(), s)?;
    let dirs = twist_tangents(gripper, space)?;
    let out: Vec<(f64, bool)> = joints
        .positions
        .par_iter()
        .zip(dirs.par_iter())
        .map(|(q, u)| {
            let j = space.select(&model.geometric_jacobian(q)?);
            let a2 = directional_manipulability(&j, u)?;
            Ok((a2, a2 == 0.0))
        })
        .collect::<Result<_>>()?;
    let (values, singular) = out.into_iter().unzip();
    Ok(MetricProfile::new(values, s, singular, &joints.reachable))
}

/// Squared (optionally weighted) torque norm of arm plus object.
pub fn torque_effort(
    model: &ChainModel,
    joints: &JointTrajectory,
    grasp: &GraspCandidate,
    object: &RigidObject,
    s: &[f64],
    gravity: &Vector3<f64>,
    weights: Option<&DVector<f64>>,
) -> Result<MetricProfile> {
    check_lengths(joints, joints.len(), s)?;
    if let Some(w) = weights {
        model.check_dim(w)?;
    }
    let payload = grasp.payload_inertia(object);
    let values: Vec<f64> = (0..joints.len())
        .into_par_iter()
        .map(|i| {
            let tau = inverse_dynamics(
                model,
                &joints.positions[i],
                &joints.velocities[i],
                &joints.accelerations[i],
                Some(&payload),
                gravity,
            )?;
            Ok(match weights {
                Some(w) => tau.iter().zip(w.iter()).map(|(t, w)| w * t * t).sum(),
                None => tau.norm_squared(),
            })
        })
        .collect::<Result<_>>()?;
    let n = values.len();
    Ok(MetricProfile::new(values, s, vec![false; n], &joints.reachable))
}

/// Effective mass of arm plus object along the motion direction.
#[allow(clippy::too_many_arguments)]
pub fn tem(
    model: &ChainModel,
    joints: &JointTrajectory,
    gripper: &TaskTrajectory,
    grasp: &GraspCandidate,
    object: &RigidObject,
    s: &[f64],
    direction: MassDirection,
    space: TaskSpace,
) -> Result<MetricProfile> {
    check_lengths(joints, gripper.len(), s)?;
    let dirs = match direction {
        MassDirection::Translational => translational_tangents(gripper)?,
        MassDirection::FullTwist => twist_tangents(gripper, space)?,
    };
    let payload = grasp.payload_inertia(object);
    let out: Vec<EffectiveMass> = joints
        .positions
        .par_iter()
        .zip(dirs.par_iter())
        .map(|(q, u)| {
            let m = augmented_mass_matrix_with(model, q, &payload)?;
            let inv = operational_mass_inverse_from(model, q, &m)?;
            effective_mass_along(&inv, u)
        })
        .collect::<Result<_>>()?;
    let values = out.iter().map(|m| m.value).collect();
    let singular = out.iter().map(|m| m.near_singular).collect();
    Ok(MetricProfile::new(values, s, singular, &joints.reachable))
}

/// Everything that parameterizes a grasp evaluation besides the inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationSettings {
    pub ik: IkSettings,
    pub gravity: Vector3<f64>,
    pub quadrature: Quadrature,
    pub torque_weights: Option<DVector<f64>>,
    pub mass_direction: MassDirection,
}

impl Default for EvaluationSettings {
    fn default() -> Self {
        Self {
            ik: IkSettings::default(),
            gravity: STANDARD_GRAVITY,
            quadrature: Quadrature::ArcLength,
            torque_weights: None,
            mass_direction: MassDirection::Translational,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraspProfiles {
    pub tov: MetricProfile,
    pub tme: MetricProfile,
    pub tem: MetricProfile,
    pub joints: JointTrajectory,
    pub s: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraspScorecard {
    pub grasp_id: String,
    pub feasible: bool,
    /// Why the grasp is infeasible, if it is.
    pub reason: Option<String>,
    pub profiles: Option<GraspProfiles>,
}

impl GraspScorecard {
    pub fn infeasible(grasp_id: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            grasp_id: grasp_id.into(),
            feasible: false,
            reason: Some(reason.into()),
            profiles: None,
        }
    }

    pub fn h_tov(&self) -> Option<f64> {
        self.profiles.as_ref().map(|p| p.tov.integral)
    }

    pub fn h_tme(&self) -> Option<f64> {
        self.profiles.as_ref().map(|p| p.tme.integral)
    }

    pub fn h_tem(&self) -> Option<f64> {
        self.profiles.as_ref().map(|p| p.tem.integral)
    }

    /// `[H_TOV, H_TME, H_TEM]` for feasible grasps.
    pub fn scalars(&self) -> Option<[f64; 3]> {
        Some([self.h_tov()?, self.h_tme()?, self.h_tem()?])
    }

    pub fn unreachable_count(&self) -> usize {
        self.profiles
            .as_ref()
            .map_or(0, |p| p.joints.reachable.iter().filter(|r| !**r).count())
    }
}

/// Tracks the grasp's gripper trajectory and evaluates all three objectives.
/// A grasp whose first waypoint cannot be reached yields an infeasible
/// scorecard; other failures are errors.
pub fn evaluate_grasp(
    model: &ChainModel,
    task: &TaskTrajectory,
    grasp: &GraspCandidate,
    object: &RigidObject,
    settings: &EvaluationSettings,
) -> Result<GraspScorecard> {
    let gripper = gripper_trajectory(task, grasp);
    let joints = match track_trajectory(model, &gripper, &settings.ik) {
        Ok(j) => j,
        Err(Error::Infeasible(reason)) => {
            return Ok(GraspScorecard::infeasible(grasp.id.clone(), reason))
        }
        Err(e) => return Err(e),
    };
    let s = abscissae(task, settings.quadrature);
    let space = settings.ik.task_space;
    let tov = tov(model, &joints, &gripper, &s, space)?;
    let tme = torque_effort(
        model,
        &joints,
        grasp,
        object,
        &s,
        &settings.gravity,
        settings.torque_weights.as_ref(),
    )?;
    let tem = tem(model, &joints, &gripper, grasp, object, &s, settings.mass_direction, space)?;
    Ok(GraspScorecard {
        grasp_id: grasp.id.clone(),
        feasible: true,
        reason: None,
        profiles: Some(GraspProfiles {
            tov,
            tme,
            tem,
            joints,
            s,
        }),
    })
}

/// Evaluates every grasp in parallel; output order follows `grasps`.
pub fn evaluate_grasps(
    model: &ChainModel,
    task: &TaskTrajectory,
    grasps: &[GraspCandidate],
    object: &RigidObject,
    settings: &EvaluationSettings,
) -> Result<Vec<GraspScorecard>> {
    grasps
        .par_iter()
        .map(|g| evaluate_grasp(model, task, g, object, settings))
        .collect()
}
