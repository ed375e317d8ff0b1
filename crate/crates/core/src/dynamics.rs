//! Joint-space and operational-space dynamics of a serial chain, optionally
//! carrying a rigid payload at the operational point.
//!
//! Two independent routes are implemented: the composite-rigid-body method
//! for the mass matrix and recursive Newton-Euler for inverse dynamics. The
//! Coriolis matrix is built in Christoffel form from central differences of
//! the mass matrix, so `Ṁ − 2C` is skew-symmetric up to the difference error.
//!
//! All quantities are computed in world coordinates. Spatial inertias used by
//! the composite-rigid-body pass are referenced to the world origin, so the
//! composite inertia of a subtree is a plain sum.

use nalgebra::{DMatrix, DVector, Matrix3, Matrix6, SymmetricEigen, Vector3};

use crate::chain::{jacobian_from_frames, ChainFrames, ChainModel, JointKind};
use crate::error::{Error, Result};
use crate::geometry::{rotation6, SpatialInertia};
use crate::task::{GraspCandidate, RigidObject};

pub const STANDARD_GRAVITY: Vector3<f64> = Vector3::new(0.0, 0.0, -9.81);

/// Step for the central differences of `M(q)` in the Christoffel symbols.
pub const CHRISTOFFEL_STEP: f64 = 1e-6;

/// Condition number beyond which `M_tot` is reported as degenerate.
pub const MAX_CONDITION: f64 = 1e12;

/// Mass, Coriolis and gravity terms at one state.
#[derive(Debug, Clone)]
pub struct DynamicsEvaluation {
    pub mass: DMatrix<f64>,
    pub coriolis: DMatrix<f64>,
    pub gravity: DVector<f64>,
}

struct Body {
    mass: f64,
    com: Vector3<f64>,
    inertia: Matrix3<f64>,
}

/// Payload given in the tool frame, expressed as a world-frame body.
fn tool_body(frames: &ChainFrames, tool: &SpatialInertia) -> Body {
    let (mass, com, inertia) = tool.to_body();
    let r = frames.tool.rotation.matrix();
    Body {
        mass,
        com: frames.tool.transform_point(&com),
        inertia: r * inertia * r.transpose(),
    }
}

fn link_bodies(model: &ChainModel, frames: &ChainFrames) -> Vec<Body> {
    model
        .links()
        .zip(&frames.links)
        .map(|(link, frame)| {
            let r = frame.rotation.matrix();
            Body {
                mass: link.mass,
                com: frame.transform_point(&link.com),
                inertia: r * link.inertia * r.transpose(),
            }
        })
        .collect()
}

/// Motion subspace of joint `i` as a twist referenced to the world origin.
fn motion_subspace(model: &ChainModel, frames: &ChainFrames, i: usize) -> nalgebra::Vector6<f64> {
    let z = frames.axes[i];
    let mut s = nalgebra::Vector6::zeros();
    match model.segments()[i].joint.kind {
        JointKind::Revolute => {
            let v = frames.origins[i].cross(&z);
            s.fixed_rows_mut::<3>(0).copy_from(&v);
            s.fixed_rows_mut::<3>(3).copy_from(&z);
        }
        JointKind::Prismatic => s.fixed_rows_mut::<3>(0).copy_from(&z),
    }
    s
}

/// Joint-space inertia matrix by the composite-rigid-body method.
pub fn mass_matrix(model: &ChainModel, q: &DVector<f64>) -> Result<DMatrix<f64>> {
    mass_matrix_with_tool(model, q, None)
}

/// Mass matrix of the chain with a rigid payload (inertia given in the tool
/// frame, referenced to the operational point) welded to the last link.
pub fn mass_matrix_with_tool(
    model: &ChainModel,
    q: &DVector<f64>,
    tool: Option<&SpatialInertia>,
) -> Result<DMatrix<f64>> {
    let frames = model.frames(q)?;
    Ok(crba(model, &frames, tool))
}

fn crba(model: &ChainModel, frames: &ChainFrames, tool: Option<&SpatialInertia>) -> DMatrix<f64> {
    let n = model.dof();
    let bodies = link_bodies(model, frames);
    let mut composite: Vec<Matrix6<f64>> = bodies
        .iter()
        .map(|b| *SpatialInertia::from_body(b.mass, &b.com, &b.inertia).matrix())
        .collect();
    if let Some(t) = tool {
        let b = tool_body(frames, t);
        composite[n - 1] += *SpatialInertia::from_body(b.mass, &b.com, &b.inertia).matrix();
    }
    for i in (0..n - 1).rev() {
        let child = composite[i + 1];
        composite[i] += child;
    }
    let s: Vec<_> = (0..n).map(|i| motion_subspace(model, frames, i)).collect();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        let f = composite[i] * s[i];
        for j in 0..=i {
            let v = s[j].dot(&f);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Inverse dynamics by recursive Newton-Euler. `gravity` is the acceleration
/// of gravity in world coordinates; `tool` is an optional payload welded at
/// the operational point, given in the tool frame.
pub fn inverse_dynamics(
    model: &ChainModel,
    q: &DVector<f64>,
    qd: &DVector<f64>,
    qdd: &DVector<f64>,
    tool: Option<&SpatialInertia>,
    gravity: &Vector3<f64>,
) -> Result<DVector<f64>> {
    model.check_dim(qd)?;
    model.check_dim(qdd)?;
    let frames = model.frames(q)?;
    Ok(rnea(model, &frames, qd, qdd, tool, gravity))
}

fn rnea(
    model: &ChainModel,
    frames: &ChainFrames,
    qd: &DVector<f64>,
    qdd: &DVector<f64>,
    tool: Option<&SpatialInertia>,
    gravity: &Vector3<f64>,
) -> DVector<f64> {
    let n = model.dof();
    let bodies = link_bodies(model, frames);
    let payload = tool.map(|t| tool_body(frames, t));

    let origin = |i: usize| frames.links[i].translation;

    // forward pass: angular velocity/acceleration and origin acceleration
    let mut omega = vec![Vector3::zeros(); n];
    let mut alpha = vec![Vector3::zeros(); n];
    let mut acc = vec![Vector3::zeros(); n];
    let mut w_prev = Vector3::zeros();
    let mut a_prev = Vector3::zeros();
    let mut acc_prev = -gravity;
    let mut o_prev = model.base_pose.translation;
    for i in 0..n {
        let z = frames.axes[i];
        let r = origin(i) - o_prev;
        let mut a = acc_prev + a_prev.cross(&r) + w_prev.cross(&w_prev.cross(&r));
        match model.segments()[i].joint.kind {
            JointKind::Revolute => {
                omega[i] = w_prev + z * qd[i];
                alpha[i] = a_prev + z * qdd[i] + w_prev.cross(&(z * qd[i]));
            }
            JointKind::Prismatic => {
                omega[i] = w_prev;
                alpha[i] = a_prev;
                a += z * qdd[i] + 2.0 * w_prev.cross(&(z * qd[i]));
            }
        }
        acc[i] = a;
        w_prev = omega[i];
        a_prev = alpha[i];
        acc_prev = a;
        o_prev = origin(i);
    }

    // body wrenches about each link origin
    let wrench = |b: &Body, o: &Vector3<f64>, w: &Vector3<f64>, al: &Vector3<f64>, a: &Vector3<f64>| {
        let rc = b.com - o;
        let a_c = a + al.cross(&rc) + w.cross(&w.cross(&rc));
        let f = a_c * b.mass;
        let moment = b.inertia * al + w.cross(&(b.inertia * w)) + rc.cross(&f);
        (f, moment)
    };

    let mut tau = DVector::zeros(n);
    let mut f_next = Vector3::zeros();
    let mut n_next = Vector3::zeros();
    for i in (0..n).rev() {
        let o = origin(i);
        let (mut f, mut m) = wrench(&bodies[i], &o, &omega[i], &alpha[i], &acc[i]);
        if i == n - 1 {
            if let Some(p) = &payload {
                let (fp, mp) = wrench(p, &o, &omega[i], &alpha[i], &acc[i]);
                f += fp;
                m += mp;
            }
        } else {
            m += n_next + (origin(i + 1) - o).cross(&f_next);
            f += f_next;
        }
        tau[i] = match model.segments()[i].joint.kind {
            JointKind::Revolute => frames.axes[i].dot(&m),
            JointKind::Prismatic => frames.axes[i].dot(&f),
        };
        f_next = f;
        n_next = m;
    }
    tau
}

/// Gravity torques `N(q) = ∂V/∂q`.
pub fn gravity_vector(
    model: &ChainModel,
    q: &DVector<f64>,
    gravity: &Vector3<f64>,
    tool: Option<&SpatialInertia>,
) -> Result<DVector<f64>> {
    let zero = DVector::zeros(model.dof());
    inverse_dynamics(model, q, &zero, &zero, tool, gravity)
}

/// Gravitational potential energy `V(q) = −Σ mᵢ gᵀcᵢ(q)`.
pub fn potential_energy(
    model: &ChainModel,
    q: &DVector<f64>,
    gravity: &Vector3<f64>,
    tool: Option<&SpatialInertia>,
) -> Result<f64> {
    let frames = model.frames(q)?;
    let mut v: f64 = link_bodies(model, &frames)
        .iter()
        .map(|b| -b.mass * gravity.dot(&b.com))
        .sum();
    if let Some(t) = tool {
        let b = tool_body(&frames, t);
        v -= b.mass * gravity.dot(&b.com);
    }
    Ok(v)
}

/// `∂M/∂q_k` for every `k`, by central differences with step `h`.
pub fn mass_matrix_partials(
    model: &ChainModel,
    q: &DVector<f64>,
    tool: Option<&SpatialInertia>,
    h: f64,
) -> Result<Vec<DMatrix<f64>>> {
    model.check_dim(q)?;
    (0..model.dof())
        .map(|k| {
            let mut qp = q.clone();
            let mut qm = q.clone();
            qp[k] += h;
            qm[k] -= h;
            let mp = mass_matrix_with_tool(model, &qp, tool)?;
            let mm = mass_matrix_with_tool(model, &qm, tool)?;
            Ok((mp - mm) / (2.0 * h))
        })
        .collect()
}

/// Coriolis/centrifugal matrix in Christoffel form,
/// `Cᵢⱼ = ½ Σₖ (∂Mᵢⱼ/∂qₖ + ∂Mᵢₖ/∂qⱼ − ∂Mₖⱼ/∂qᵢ) q̇ₖ`.
pub fn coriolis_matrix(
    model: &ChainModel,
    q: &DVector<f64>,
    qd: &DVector<f64>,
    tool: Option<&SpatialInertia>,
) -> Result<DMatrix<f64>> {
    model.check_dim(qd)?;
    let dm = mass_matrix_partials(model, q, tool, CHRISTOFFEL_STEP)?;
    Ok(christoffel(&dm, qd))
}

pub(crate) fn christoffel(dm: &[DMatrix<f64>], qd: &DVector<f64>) -> DMatrix<f64> {
    let n = qd.len();
    let mut c = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for k in 0..n {
                acc += (dm[k][(i, j)] + dm[j][(i, k)] - dm[i][(k, j)]) * qd[k];
            }
            c[(i, j)] = 0.5 * acc;
        }
    }
    c
}

/// `M`, `C` and `N` at `(q, q̇)`.
pub fn evaluate(
    model: &ChainModel,
    q: &DVector<f64>,
    qd: &DVector<f64>,
    tool: Option<&SpatialInertia>,
    gravity: &Vector3<f64>,
) -> Result<DynamicsEvaluation> {
    Ok(DynamicsEvaluation {
        mass: mass_matrix_with_tool(model, q, tool)?,
        coriolis: coriolis_matrix(model, q, qd, tool)?,
        gravity: gravity_vector(model, q, gravity, tool)?,
    })
}

/// Payload inertia at the operational point, rotated into world axes.
fn world_tool_inertia(frames: &ChainFrames, tool: &SpatialInertia) -> Matrix6<f64> {
    let r6 = rotation6(&frames.tool.rotation.matrix());
    r6 * tool.matrix() * r6.transpose()
}

/// `M_arm + Jᵀ (ᵍM_o) J` with the payload inertia expressed at the
/// operational point.
pub fn augmented_mass_matrix_with(
    model: &ChainModel,
    q: &DVector<f64>,
    tool: &SpatialInertia,
) -> Result<DMatrix<f64>> {
    let frames = model.frames(q)?;
    let m_arm = crba(model, &frames, None);
    let j = jacobian_from_frames(model, &frames, &frames.tool.translation);
    let w = world_tool_inertia(&frames, tool);
    let w = DMatrix::from_iterator(6, 6, w.iter().copied());
    let m = m_arm + j.transpose() * w * &j;
    Ok((&m + m.transpose()) * 0.5)
}

/// Arm mass matrix augmented with a grasped object.
pub fn augmented_mass_matrix(
    model: &ChainModel,
    q: &DVector<f64>,
    grasp: &GraspCandidate,
    object: &RigidObject,
) -> Result<DMatrix<f64>> {
    augmented_mass_matrix_with(model, q, &grasp.payload_inertia(object))
}

fn condition_number(m: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(m.clone()).eigenvalues;
    let lo = eig.min();
    let hi = eig.max();
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// `Λ⁻¹ = J M⁻¹ Jᵀ` for a joint-space inertia `m` at configuration `q`.
pub fn operational_mass_inverse_from(
    model: &ChainModel,
    q: &DVector<f64>,
    m: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let cond = condition_number(m);
    if !(cond <= MAX_CONDITION) {
        return Err(Error::DegenerateModel {
            condition: cond,
            limit: MAX_CONDITION,
        });
    }
    let j = model.geometric_jacobian(q)?;
    let chol = m.clone().cholesky().ok_or(Error::DegenerateModel {
        condition: cond,
        limit: MAX_CONDITION,
    })?;
    let x = chol.solve(&j.transpose());
    let l = &j * x;
    Ok((&l + l.transpose()) * 0.5)
}

/// Operational-space inverse inertia of arm plus grasped object.
pub fn operational_mass_inverse(
    model: &ChainModel,
    q: &DVector<f64>,
    grasp: &GraspCandidate,
    object: &RigidObject,
) -> Result<DMatrix<f64>> {
    let m = augmented_mass_matrix(model, q, grasp, object)?;
    operational_mass_inverse_from(model, q, &m)
}
