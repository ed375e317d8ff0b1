//! Damped least-squares tracking of a gripper trajectory in joint space.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::chain::ChainModel;
use crate::error::{Error, Result};
use crate::geometry::Pose;
use crate::task::TaskTrajectory;

/// Which components of the operational-point pose are tracked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskSpace {
    /// Position and orientation.
    #[default]
    Pose,
    /// Position only; orientation is left free (planar or under-actuated arms).
    Position,
}

impl TaskSpace {
    pub fn rows(self) -> usize {
        match self {
            TaskSpace::Pose => 6,
            TaskSpace::Position => 3,
        }
    }

    /// Keeps the rows of a 6-row matrix that belong to this task space.
    pub fn select(self, m: &DMatrix<f64>) -> DMatrix<f64> {
        m.rows(0, self.rows()).into_owned()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IkSettings {
    pub damping: f64,
    pub max_iterations: usize,
    pub position_tolerance: f64,
    pub orientation_tolerance: f64,
    /// Seed of the first waypoint; `None` means mid-range of the joint limits.
    pub seed: Option<DVector<f64>>,
    pub task_space: TaskSpace,
    /// Largest joint step per iteration (rad or m).
    pub max_step: f64,
}

impl Default for IkSettings {
    fn default() -> Self {
        Self {
            damping: 1e-3,
            max_iterations: 200,
            position_tolerance: 1e-6,
            orientation_tolerance: 1e-6,
            seed: None,
            task_space: TaskSpace::Pose,
            max_step: 0.5,
        }
    }
}

impl IkSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0) {
            return Err(Error::InvalidInput("IK damping must be positive".into()));
        }
        if !(self.position_tolerance > 0.0) || !(self.orientation_tolerance > 0.0) {
            return Err(Error::InvalidInput("IK tolerances must be positive".into()));
        }
        if !(self.max_step > 0.0) {
            return Err(Error::InvalidInput("IK max step must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct IkOutcome {
    pub q: DVector<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub position_error: f64,
    pub orientation_error: f64,
}

fn pose_error(model: &ChainModel, q: &DVector<f64>, target: &Pose, space: TaskSpace) -> Result<(DVector<f64>, f64, f64)> {
    let current = model.forward_kinematics(q)?;
    let d = current.displacement_to(target);
    let pos = d.fixed_rows::<3>(0).norm();
    let rot = d.fixed_rows::<3>(3).norm();
    let e = DVector::from_iterator(space.rows(), d.iter().copied().take(space.rows()));
    let rot = if space == TaskSpace::Pose { rot } else { 0.0 };
    Ok((e, pos, rot))
}

/// Runs damped least squares from `seed` and reports the final iterate
/// whether or not it converged.
pub fn solve_waypoint_detailed(
    model: &ChainModel,
    target: &Pose,
    seed: &DVector<f64>,
    settings: &IkSettings,
) -> Result<IkOutcome> {
    settings.validate()?;
    model.check_dim(seed)?;
    if !target.translation.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidInput("IK target is not finite".into()));
    }
    let space = settings.task_space;
    let lambda2 = settings.damping * settings.damping;
    let within = |p: f64, r: f64| {
        p <= settings.position_tolerance && r <= settings.orientation_tolerance
    };

    let mut q = seed.clone();
    let (mut e, mut pos, mut rot) = pose_error(model, &q, target, space)?;
    let mut iterations = 0;
    let mut polish = 0;
    loop {
        if within(pos, rot) {
            // a few extra steps drive the residual toward round-off so that
            // nearly identical inputs give nearly identical solutions
            if polish >= 3 || (pos < 1e-13 && rot < 1e-13) {
                break;
            }
            polish += 1;
        } else if iterations >= settings.max_iterations {
            break;
        }
        let j = space.select(&model.geometric_jacobian(&q)?);
        let mut jjt = &j * j.transpose();
        for k in 0..jjt.nrows() {
            jjt[(k, k)] += lambda2;
        }
        let y = match jjt.cholesky() {
            Some(c) => c.solve(&e),
            None => break,
        };
        let mut dq = j.transpose() * y;
        let step = dq.amax();
        if step > settings.max_step {
            dq *= settings.max_step / step;
        }
        let candidate = {
            let mut c = &q + dq;
            model.clamp_to_limits(&mut c);
            c
        };
        let (e2, pos2, rot2) = pose_error(model, &candidate, target, space)?;
        if within(pos, rot) && pos2 + rot2 >= pos + rot {
            break;
        }
        q = candidate;
        e = e2;
        pos = pos2;
        rot = rot2;
        iterations += 1;
    }
    Ok(IkOutcome {
        converged: within(pos, rot),
        q,
        iterations,
        position_error: pos,
        orientation_error: rot,
    })
}

/// Joint configuration placing the operational point at `target`.
pub fn solve_waypoint(
    model: &ChainModel,
    target: &Pose,
    seed: &DVector<f64>,
    settings: &IkSettings,
) -> Result<DVector<f64>> {
    let out = solve_waypoint_detailed(model, target, seed, settings)?;
    if out.converged {
        Ok(out.q)
    } else {
        Err(Error::MaxIterations {
            iterations: out.iterations,
            position_error: out.position_error,
            orientation_error: out.orientation_error,
        })
    }
}

/// Joint-space realization of a gripper trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTrajectory {
    pub times: Vec<f64>,
    pub positions: Vec<DVector<f64>>,
    pub velocities: Vec<DVector<f64>>,
    pub accelerations: Vec<DVector<f64>>,
    pub reachable: Vec<bool>,
}

impl JointTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Builds velocities and accelerations from positions by second-order
    /// finite differences on the (possibly non-uniform) time grid.
    pub fn from_positions(times: Vec<f64>, positions: Vec<DVector<f64>>, reachable: Vec<bool>) -> Self {
        let (velocities, accelerations) = differentiate(&times, &positions);
        Self {
            times,
            positions,
            velocities,
            accelerations,
            reachable,
        }
    }
}

/// Three-point derivatives written in terms of successive differences so that
/// a constant signal yields exact zeros.
fn differentiate(t: &[f64], q: &[DVector<f64>]) -> (Vec<DVector<f64>>, Vec<DVector<f64>>) {
    let n = q.len();
    let dof = q[0].len();
    if n == 2 {
        let v = (&q[1] - &q[0]) / (t[1] - t[0]);
        return (vec![v.clone(), v], vec![DVector::zeros(dof); 2]);
    }
    let mut vel = vec![DVector::zeros(dof); n];
    let mut acc = vec![DVector::zeros(dof); n];
    for i in 1..n - 1 {
        let h1 = t[i] - t[i - 1];
        let h2 = t[i + 1] - t[i];
        let d1 = (&q[i] - &q[i - 1]) / h1;
        let d2 = (&q[i + 1] - &q[i]) / h2;
        acc[i] = (&d2 - &d1) * (2.0 / (h1 + h2));
        vel[i] = (&d1 * h2 + &d2 * h1) / (h1 + h2);
        if i == 1 {
            vel[0] = &d1 - &acc[i] * (0.5 * h1);
            acc[0] = acc[i].clone();
        }
        if i == n - 2 {
            vel[n - 1] = &d2 + &acc[i] * (0.5 * h2);
            acc[n - 1] = acc[i].clone();
        }
    }
    (vel, acc)
}

/// Solves every waypoint, seeding each from the previous solution. Unreachable
/// waypoints keep the best iterate and are flagged; an unreachable first
/// waypoint makes the whole trajectory infeasible.
pub fn track_trajectory(
    model: &ChainModel,
    trajectory: &TaskTrajectory,
    settings: &IkSettings,
) -> Result<JointTrajectory> {
    let mut seed = match &settings.seed {
        Some(s) => {
            model.check_dim(s)?;
            s.clone()
        }
        None => model.mid_range(),
    };
    let mut positions = Vec::with_capacity(trajectory.len());
    let mut reachable = Vec::with_capacity(trajectory.len());
    for (i, target) in trajectory.poses().iter().enumerate() {
        let out = solve_waypoint_detailed(model, target, &seed, settings)?;
        if i == 0 && !out.converged {
            return Err(Error::Infeasible(format!(
                "position error {:.3e} m, orientation error {:.3e} rad after {} iterations",
                out.position_error, out.orientation_error, out.iterations
            )));
        }
        reachable.push(out.converged);
        seed = out.q.clone();
        positions.push(out.q);
    }
    Ok(JointTrajectory::from_positions(
        trajectory.times().to_vec(),
        positions,
        reachable,
    ))
}
