//! Reference implementations used only by tests. Nothing here calls into the
//! library; only nalgebra shapes are shared.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};

/// Planar two-link arm in the x–y plane with point masses at the link tips,
/// joints about +z, gravity of magnitude `g` along −y.
#[derive(Debug, Clone, Copy)]
pub struct TwoRParams {
    pub l1: f64,
    pub l2: f64,
    pub m1: f64,
    pub m2: f64,
    pub g: f64,
}

#[derive(Debug, Clone)]
pub struct TwoRState {
    pub tip: Vector2<f64>,
    /// Rows: ẋ, ẏ, ω_z.
    pub jacobian: DMatrix<f64>,
    pub mass: Matrix2<f64>,
    pub coriolis: Matrix2<f64>,
    pub gravity: Vector2<f64>,
    pub torque: Vector2<f64>,
}

/// Closed-form kinematics and dynamics.
///
/// Tip positions: p₁ = l₁(c₁, s₁), p₂ = p₁ + l₂(c₁₂, s₁₂).
/// Kinetic energy T = ½m₁|ṗ₁|² + ½m₂|ṗ₂|² with
/// |ṗ₁|² = l₁²q̇₁², |ṗ₂|² = l₁²q̇₁² + l₂²(q̇₁+q̇₂)² + 2l₁l₂c₂q̇₁(q̇₁+q̇₂),
/// which gives
/// M₁₁ = m₁l₁² + m₂(l₁² + l₂² + 2l₁l₂c₂), M₁₂ = m₂(l₂² + l₁l₂c₂), M₂₂ = m₂l₂².
/// The only non-zero partial is ∂M/∂q₂, so with h = −m₂l₁l₂s₂ the
/// Christoffel symbols give C = [[h q̇₂, h(q̇₁+q̇₂)], [−h q̇₁, 0]].
/// Potential V = m₁g l₁s₁ + m₂g(l₁s₁ + l₂s₁₂), so
/// N₁ = (m₁+m₂)g l₁c₁ + m₂g l₂c₁₂, N₂ = m₂g l₂c₁₂.
pub fn two_r_closed_form(p: &TwoRParams, q: [f64; 2], qd: [f64; 2], qdd: [f64; 2]) -> TwoRState {
    let TwoRParams { l1, l2, m1, m2, g } = *p;
    let (s1, c1) = q[0].sin_cos();
    let (s2, c2) = q[1].sin_cos();
    let (s12, c12) = (q[0] + q[1]).sin_cos();

    let tip = Vector2::new(l1 * c1 + l2 * c12, l1 * s1 + l2 * s12);
    let jacobian = DMatrix::from_row_slice(
        3,
        2,
        &[-l1 * s1 - l2 * s12, -l2 * s12, l1 * c1 + l2 * c12, l2 * c12, 1.0, 1.0],
    );
    let m11 = m1 * l1 * l1 + m2 * (l1 * l1 + l2 * l2 + 2.0 * l1 * l2 * c2);
    let m12 = m2 * (l2 * l2 + l1 * l2 * c2);
    let m22 = m2 * l2 * l2;
    let mass = Matrix2::new(m11, m12, m12, m22);
    let h = -m2 * l1 * l2 * s2;
    let coriolis = Matrix2::new(h * qd[1], h * (qd[0] + qd[1]), -h * qd[0], 0.0);
    let gravity = Vector2::new(
        (m1 + m2) * g * l1 * c1 + m2 * g * l2 * c12,
        m2 * g * l2 * c12,
    );
    let torque = mass * Vector2::from(qdd) + coriolis * Vector2::from(qd) + gravity;
    TwoRState {
        tip,
        jacobian,
        mass,
        coriolis,
        gravity,
        torque,
    }
}

/// Two-link inverse kinematics for the tip position; `elbow_up` picks q₂ < 0.
/// Angles are wrapped to (−π, π].
pub fn two_r_inverse(p: &TwoRParams, x: f64, y: f64, elbow_up: bool) -> Option<[f64; 2]> {
    let c2 = (x * x + y * y - p.l1 * p.l1 - p.l2 * p.l2) / (2.0 * p.l1 * p.l2);
    if !(-1.0..=1.0).contains(&c2) {
        return None;
    }
    let s2 = (1.0 - c2 * c2).sqrt() * if elbow_up { -1.0 } else { 1.0 };
    let q2 = s2.atan2(c2);
    let q1 = y.atan2(x) - (p.l2 * s2).atan2(p.l1 + p.l2 * c2);
    Some([q1.sin().atan2(q1.cos()), q2])
}

/// Objective sense for the brute-force scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Better {
    Higher,
    Lower,
}

/// Indices of points no other point dominates, by checking every pair.
pub fn brute_force_pareto(points: &[[f64; 3]], senses: &[Better; 3]) -> Vec<usize> {
    let no_worse = |a: f64, b: f64, s: Better| match s {
        Better::Higher => a >= b,
        Better::Lower => a <= b,
    };
    let better = |a: f64, b: f64, s: Better| match s {
        Better::Higher => a > b,
        Better::Lower => a < b,
    };
    (0..points.len())
        .filter(|&i| {
            !(0..points.len()).any(|j| {
                j != i
                    && (0..3).all(|k| no_worse(points[j][k], points[i][k], senses[k]))
                    && (0..3).any(|k| better(points[j][k], points[i][k], senses[k]))
            })
        })
        .collect()
}

/// Central differences, one column per coordinate of `x`.
pub fn finite_difference_jacobian<F>(f: F, x: &DVector<f64>, h: f64) -> DMatrix<f64>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let m = f(x).len();
    let mut jac = DMatrix::zeros(m, x.len());
    for k in 0..x.len() {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[k] += h;
        xm[k] -= h;
        jac.set_column(k, &((f(&xp) - f(&xm)) / (2.0 * h)));
    }
    jac
}

/// Rotation vector of a 3×3 rotation matrix (angle below π).
pub fn rotation_log(r: &nalgebra::Matrix3<f64>) -> nalgebra::Vector3<f64> {
    let cos = ((r.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    let angle = cos.acos();
    let v = nalgebra::Vector3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]);
    if angle < 1e-12 {
        v * 0.5
    } else {
        v * (angle / (2.0 * angle.sin()))
    }
}

/// Squared radius of the ellipsoid `{u : uᵀ(JJᵀ)⁻¹u ≤ 1}` along unit `u`,
/// from the eigenvectors of `JJᵀ`: a² = 1 / Σ (vᵢ·u)² / λᵢ.
pub fn ellipsoid_radius_sq(j: &DMatrix<f64>, u: &DVector<f64>) -> f64 {
    let jjt = j * j.transpose();
    let eig = jjt.symmetric_eigen();
    let mut acc = 0.0;
    for i in 0..eig.eigenvalues.len() {
        let c = eig.eigenvectors.column(i).dot(u);
        acc += c * c / eig.eigenvalues[i];
    }
    1.0 / acc
}
