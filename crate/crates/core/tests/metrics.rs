mod oracles;
mod support;

use graspeval::dynamics::{gravity_vector, mass_matrix, operational_mass_inverse, operational_mass_inverse_from};
use graspeval::geometry::{Pose, Rotation};
use graspeval::ik::{track_trajectory, IkSettings, JointTrajectory, TaskSpace};
use graspeval::metrics::{
    directional_manipulability, effective_mass, effective_mass_along, evaluate_grasp, evaluate_grasps,
    tem, torque_effort, tov, EvaluationSettings, MassDirection, EFFECTIVE_MASS_CAP,
};
use graspeval::task::{gripper_trajectory, path_parameter, GraspCandidate, RigidObject, TaskTrajectory};
use graspeval::Error;
use nalgebra::{DMatrix, DVector, Vector3};
use oracles::{ellipsoid_radius_sq, two_r_closed_form, two_r_inverse, TwoRParams};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{FRAC_PI_2, PI};

fn unit(v: DVector<f64>) -> DVector<f64> {
    let n = v.norm();
    v / n
}

fn trapezoid_oracle(v: &[f64], s: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 1..v.len() {
        acc += (s[i] - s[i - 1]) * (v[i] + v[i - 1]) / 2.0;
    }
    acc
}

#[test]
fn tov_matches_eigen_radius_on_random_jacobians() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..1000 {
        let j = DMatrix::from_fn(6, 7, |_, _| rng.gen_range(-1.0..1.0));
        let u = unit(support::random_vec(6, 1.0, &mut rng));
        let a2 = directional_manipulability(&j, &u).unwrap();
        let oracle = ellipsoid_radius_sq(&j, &u);
        assert!((a2 - oracle).abs() / oracle < 1e-10, "{a2} vs {oracle}");
        let inv = (&j * j.transpose()).try_inverse().unwrap();
        let q = u.dot(&(&inv * &u));
        assert!((a2 * q - 1.0).abs() < 1e-9);
    }
}

#[test]
fn isotropic_jacobian_has_unit_radius() {
    let mut j = DMatrix::zeros(6, 7);
    j.view_mut((0, 0), (6, 6)).fill_with_identity();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let u = unit(support::random_vec(6, 1.0, &mut rng));
        assert!((directional_manipulability(&j, &u).unwrap() - 1.0).abs() < 1e-14);
    }
}

#[test]
fn two_r_major_axis_radius_is_largest_eigenvalue() {
    let p = TwoRParams { l1: 1.0, l2: 1.0, m1: 1.0, m2: 1.0, g: 9.81 };
    let o = two_r_closed_form(&p, [0.0, FRAC_PI_2], [0.0; 2], [0.0; 2]);
    let j = o.jacobian.rows(0, 2).into_owned();
    let eig = (&j * j.transpose()).symmetric_eigen();
    let k = eig.eigenvalues.imax();
    let u: DVector<f64> = eig.eigenvectors.column(k).into_owned();
    let a2 = directional_manipulability(&j, &u).unwrap();
    assert!((a2 - eig.eigenvalues[k]).abs() < 1e-12);

    // library Jacobian, position rows
    let model = support::two_r(1.0, 1.0, 1.0, 1.0);
    let jl = TaskSpace::Position.select(&model.geometric_jacobian(&DVector::from_vec(vec![0.0, FRAC_PI_2])).unwrap());
    let u3 = DVector::from_vec(vec![u[0], u[1], 0.0]);
    assert!((directional_manipulability(&jl, &u3).unwrap() - eig.eigenvalues[k]).abs() < 1e-12);
}

#[test]
fn null_direction_gives_zero() {
    // straightened 2R cannot move along its own axis
    let p = TwoRParams { l1: 1.0, l2: 1.0, m1: 1.0, m2: 1.0, g: 9.81 };
    let o = two_r_closed_form(&p, [0.0, 0.0], [0.0; 2], [0.0; 2]);
    let j = o.jacobian.rows(0, 2).into_owned();
    let a2 = directional_manipulability(&j, &DVector::from_vec(vec![1.0, 0.0])).unwrap();
    assert_eq!(a2, 0.0);
    let a2 = directional_manipulability(&j, &DVector::from_vec(vec![0.0, 1.0])).unwrap();
    assert!((a2 - 5.0).abs() < 1e-12);
}

#[test]
fn non_unit_direction_is_rejected() {
    let j = DMatrix::identity(3, 3);
    let err = directional_manipulability(&j, &DVector::from_vec(vec![1.0, 1.0, 0.0])).unwrap_err();
    assert!(matches!(err, Error::InvalidInput(_)));
    let inv = DMatrix::identity(6, 6);
    assert!(effective_mass_along(&inv, &DVector::from_vec(vec![0.5, 0.0, 0.0])).is_err());
}

fn small_box(mass: f64) -> RigidObject {
    RigidObject::uniform_cuboid(mass, [0.1, 0.1, 0.1]).unwrap()
}

#[test]
fn slider_effective_mass_is_sum_of_masses() {
    let model = support::slider(2.0);
    let grasp = GraspCandidate::new("g", Pose::identity());
    for x in [-0.5, 0.0, 0.7] {
        let m = effective_mass(
            &model,
            &DVector::from_vec(vec![x]),
            &grasp,
            &small_box(0.4),
            &DVector::from_vec(vec![1.0, 0.0, 0.0]),
        )
        .unwrap();
        assert!((m.value - 2.4).abs() < 1e-12, "{}", m.value);
        assert!(!m.near_singular);
    }
}

#[test]
fn pendulum_tangential_effective_mass_is_bob_mass() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let l = rng.gen_range(0.2..2.0);
        let m = rng.gen_range(0.1..10.0);
        let th = rng.gen_range(-3.0..3.0);
        let model = support::pendulum(l, m);
        let q = DVector::from_vec(vec![th]);
        let inv = operational_mass_inverse_from(&model, &q, &mass_matrix(&model, &q).unwrap()).unwrap();
        let tangent = DVector::from_vec(vec![-th.sin(), th.cos(), 0.0]);
        let me = effective_mass_along(&inv, &tangent).unwrap();
        assert!((me.value - m).abs() / m < 1e-10, "{} vs {m}", me.value);
    }
}

#[test]
fn straightened_two_r_caps_radial_effective_mass() {
    let model = support::two_r(1.0, 1.0, 1.0, 1.0);
    let grasp = GraspCandidate::new("g", Pose::identity());
    for q2 in [0.0, 1e-6] {
        let q = DVector::from_vec(vec![0.0, q2]);
        let m = effective_mass(&model, &q, &grasp, &small_box(0.4), &DVector::from_vec(vec![1.0, 0.0, 0.0])).unwrap();
        assert!(m.near_singular);
        assert_eq!(m.value, EFFECTIVE_MASS_CAP);
        let m = effective_mass(&model, &q, &grasp, &small_box(0.4), &DVector::from_vec(vec![0.0, 1.0, 0.0])).unwrap();
        assert!(!m.near_singular && m.value.is_finite());
    }
}

#[test]
fn effective_mass_lies_within_operational_inertia_spectrum() {
    let model = support::arm7();
    let object = RigidObject::uniform_cuboid(0.4, [0.15, 0.5, 0.2]).unwrap();
    let grasp = GraspCandidate::new("g", Pose::new(Rotation::rot_y(PI), Vector3::new(0.0, 0.1, 0.1)));
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..50 {
        let q = support::random_q(&model, &mut rng);
        let inv = operational_mass_inverse(&model, &q, &grasp, &object).unwrap();
        let lambda = inv.clone().try_inverse().unwrap();
        let eig = lambda.symmetric_eigen();
        let (lo, hi) = (eig.eigenvalues.min(), eig.eigenvalues.max());
        for len in [3, 6] {
            let u = unit(support::random_vec(len, 1.0, &mut rng));
            let m = effective_mass(&model, &q, &grasp, &object, &u).unwrap().value;
            assert!(m >= lo * (1.0 - 1e-9) && m <= hi * (1.0 + 1e-9), "{lo} <= {m} <= {hi}");
        }
    }
}

fn semicircle(n: usize) -> TaskTrajectory {
    let times = (0..n).map(|i| i as f64 * 0.05).collect();
    let poses = (0..n)
        .map(|i| {
            let phi = PI * i as f64 / (n - 1) as f64;
            Pose::from_translation(1.0 + 0.5 * phi.cos(), 0.5 * phi.sin(), 0.0)
        })
        .collect();
    TaskTrajectory::new(times, poses).unwrap()
}

#[test]
fn two_r_semicircle_profile_follows_closed_form() {
    let p = TwoRParams { l1: 1.0, l2: 1.0, m1: 1.0, m2: 1.0, g: 9.81 };
    let model = support::two_r(1.0, 1.0, 1.0, 1.0);
    let n = 61;
    let path = semicircle(n);
    let start = two_r_inverse(&p, 1.5, 0.0, false).unwrap();
    let settings = IkSettings {
        task_space: TaskSpace::Position,
        seed: Some(DVector::from_row_slice(&start)),
        ..IkSettings::default()
    };
    let joints = track_trajectory(&model, &path, &settings).unwrap();
    let s = path_parameter(&path);
    let profile = tov(&model, &joints, &path, &s, TaskSpace::Position).unwrap();

    let point = |i: usize| {
        let phi = PI * i as f64 / (n - 1) as f64;
        (1.0 + 0.5 * phi.cos(), 0.5 * phi.sin())
    };
    let oracle: Vec<f64> = (0..n)
        .map(|i| {
            let (x, y) = point(i);
            let q = two_r_inverse(&p, x, y, false).unwrap();
            let j = two_r_closed_form(&p, q, [0.0; 2], [0.0; 2]).jacobian.rows(0, 2).into_owned();
            // central chords are parallel to the circle tangent; the ends use
            // their one-sided chord
            let dir = if i == 0 || i == n - 1 {
                let (a, b) = if i == 0 { (point(0), point(1)) } else { (point(n - 2), point(n - 1)) };
                unit(DVector::from_vec(vec![b.0 - a.0, b.1 - a.1]))
            } else {
                let phi = PI * i as f64 / (n - 1) as f64;
                DVector::from_vec(vec![-phi.sin(), phi.cos()])
            };
            ellipsoid_radius_sq(&j, &dir)
        })
        .collect();
    for i in 0..n {
        assert!((profile.values[i] - oracle[i]).abs() / oracle[i] < 1e-6, "wp {i}");
    }
    let argmax = |v: &[f64]| (1..v.len() - 1).max_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap();
    let argmin = |v: &[f64]| (1..v.len() - 1).min_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap();
    assert_eq!(argmax(&profile.values), argmax(&oracle));
    assert_eq!(argmin(&profile.values), argmin(&oracle));
    assert!((profile.integral - trapezoid_oracle(&profile.values, &s)).abs() < 1e-12);
}

#[test]
fn static_hold_torque_matches_equilibrium() {
    let p = TwoRParams { l1: 0.8, l2: 0.6, m1: 1.5, m2: 0.7, g: 9.81 };
    let model = support::two_r(p.l1, p.l2, p.m1, p.m2);
    let object = small_box(0.4);
    let grasp = GraspCandidate::new("g", Pose::identity());
    let q = [0.4, -0.9];
    let joints = JointTrajectory::from_positions(
        vec![0.0, 0.5, 1.0],
        vec![DVector::from_row_slice(&q); 3],
        vec![true; 3],
    );
    let gravity = Vector3::new(0.0, -p.g, 0.0);
    let profile = torque_effort(&model, &joints, &grasp, &object, &[0.0, 0.5, 1.0], &gravity, None).unwrap();

    let o = two_r_closed_form(&p, q, [0.0; 2], [0.0; 2]);
    // the joints carry the object's weight at the tip
    let f = nalgebra::Vector2::new(0.0, 0.4 * p.g);
    let j = o.jacobian.rows(0, 2).into_owned();
    let tau = o.gravity + nalgebra::Matrix2::from_iterator(j.iter().copied()).transpose() * f;
    for v in &profile.values {
        assert!((v - tau.norm_squared()).abs() / tau.norm_squared() < 1e-12);
    }
}

#[test]
fn torque_weights_scale_each_joint() {
    let model = support::two_r(1.0, 1.0, 1.0, 1.0);
    let q = DVector::from_vec(vec![0.2, 0.3]);
    let joints = JointTrajectory::from_positions(vec![0.0, 1.0], vec![q.clone(); 2], vec![true; 2]);
    let g = Vector3::new(0.0, -9.81, 0.0);
    let grasp = GraspCandidate::new("g", Pose::identity());
    let w = DVector::from_vec(vec![2.0, 0.5]);
    let plain = torque_effort(&model, &joints, &grasp, &small_box(0.4), &[0.0, 1.0], &g, None).unwrap();
    let weighted = torque_effort(&model, &joints, &grasp, &small_box(0.4), &[0.0, 1.0], &g, Some(&w)).unwrap();
    let tau = gravity_vector(&model, &q, &g, Some(&grasp.payload_inertia(&small_box(0.4)))).unwrap();
    assert!((plain.values[0] - tau.norm_squared()).abs() < 1e-12);
    assert!((weighted.values[0] - (2.0 * tau[0] * tau[0] + 0.5 * tau[1] * tau[1])).abs() < 1e-12);
}

#[test]
fn slider_line_has_constant_effective_mass() {
    let model = support::slider(2.0);
    let n = 11;
    let path = TaskTrajectory::new(
        (0..n).map(|i| i as f64 * 0.1).collect(),
        (0..n).map(|i| Pose::from_translation(0.05 * i as f64, 0.0, 0.0)).collect(),
    )
    .unwrap();
    let settings = IkSettings {
        task_space: TaskSpace::Position,
        seed: Some(DVector::from_vec(vec![0.0])),
        ..IkSettings::default()
    };
    let joints = track_trajectory(&model, &path, &settings).unwrap();
    let s = path_parameter(&path);
    let grasp = GraspCandidate::new("g", Pose::identity());
    let profile = tem(
        &model,
        &joints,
        &path,
        &grasp,
        &small_box(0.4),
        &s,
        MassDirection::Translational,
        TaskSpace::Position,
    )
    .unwrap();
    assert!(profile.values.iter().all(|v| (v - 2.4).abs() < 1e-12));
    assert!((profile.integral - 2.4).abs() < 1e-12);
}

#[test]
fn stationary_task_has_no_direction() {
    let model = support::two_r(1.0, 1.0, 1.0, 1.0);
    let path = TaskTrajectory::new(vec![0.0, 1.0, 2.0], vec![Pose::from_translation(1.2, 0.4, 0.0); 3]).unwrap();
    let settings = EvaluationSettings {
        ik: IkSettings {
            task_space: TaskSpace::Position,
            ..IkSettings::default()
        },
        gravity: Vector3::new(0.0, -9.81, 0.0),
        ..EvaluationSettings::default()
    };
    let err = evaluate_grasp(
        &model,
        &path,
        &GraspCandidate::new("g", Pose::identity()),
        &small_box(0.4),
        &settings,
    )
    .unwrap_err();
    assert!(matches!(err, Error::NoMotion), "{err}");
}

fn scalars(model: &graspeval::ChainModel, task: &support::LoadedTask, g: usize) -> [f64; 3] {
    evaluate_grasp(model, &task.trajectory, &task.grasps[g], &task.spec.object, &task.settings)
        .unwrap()
        .scalars()
        .unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn common_rotation_leaves_scalars_unchanged() {
    let model = support::arm7();
    let task = support::load_reference("task1", None);
    let r = Rotation::from_axis_angle(&Vector3::new(0.3, -0.5, 0.8).normalize(), 0.9);
    let frame = Pose::from_rotation(r);
    let turned = model.with_base_pose(frame.compose(&model.base_pose));
    let mut moved = support::load_reference("task1", None);
    moved.trajectory = task.trajectory.transformed(&frame);
    moved.settings.gravity = r.apply(&task.settings.gravity);
    for g in [0, 4, 9] {
        let a = scalars(&model, &task, g);
        let b = scalars(&turned, &moved, g);
        for k in 0..3 {
            assert!(rel(b[k], a[k]) < 1e-8, "grasp {g} objective {k}: {} vs {}", b[k], a[k]);
        }
    }
}

#[test]
fn retiming_changes_only_torque_effort() {
    let model = support::arm7();
    let task = support::load_reference("task2", None);
    let n = task.trajectory.len();
    let t = task.trajectory.total_time();
    let times = (0..n)
        .map(|i| {
            let u = i as f64 / (n - 1) as f64;
            2.0 * t * (u + 0.05 * (2.0 * PI * u).sin())
        })
        .collect();
    let mut slow = support::load_reference("task2", None);
    slow.trajectory = task.trajectory.retimed(times).unwrap();
    let a = scalars(&model, &task, 3);
    let b = scalars(&model, &slow, 3);
    assert!(rel(b[0], a[0]) < 1e-9);
    assert!(rel(b[2], a[2]) < 1e-9);
    // torque effort depends on timing; on these tasks static gravity load
    // dominates, so the change is about one percent
    assert!(rel(b[1], a[1]) > 1e-3);
}

#[test]
fn doubling_waypoint_density_barely_moves_tov() {
    // keyframe corners make the first-order panel error visible at coarse
    // grids, so compare 100 against 200 waypoints
    let model = support::arm7();
    for name in ["task1", "task2", "task3"] {
        let coarse = support::load_reference(name, Some(100));
        let fine = support::load_reference(name, Some(200));
        for g in [0, 4, 9] {
            let a = scalars(&model, &coarse, g)[0];
            let b = scalars(&model, &fine, g)[0];
            assert!(rel(a, b) < 0.01, "{name} grasp {g}: {a} vs {b}");
        }
    }
}

#[test]
fn heavier_object_never_lowers_effective_mass() {
    let model = support::arm7();
    let task = support::load_reference("task1", None);
    let grasp = &task.grasps[2];
    let gripper = gripper_trajectory(&task.trajectory, grasp);
    let joints = track_trajectory(&model, &gripper, &task.settings.ik).unwrap();
    let s = path_parameter(&task.trajectory);
    let light = task.spec.object.scaled(0.5).unwrap();
    let run = |o: &RigidObject| {
        tem(&model, &joints, &gripper, grasp, o, &s, MassDirection::Translational, TaskSpace::Pose).unwrap()
    };
    let (a, b) = (run(&task.spec.object), run(&light));
    for (heavy, light) in a.values.iter().zip(&b.values) {
        assert!(*light <= heavy * (1.0 + 1e-12));
    }
    assert!(a.integral > b.integral);
}

#[test]
fn object_adds_torque_effort_on_reference_tasks() {
    let model = support::arm7();
    for name in ["task1", "task2", "task3"] {
        let task = support::load_reference(name, None);
        let grasp = &task.grasps[0];
        let gripper = gripper_trajectory(&task.trajectory, grasp);
        let joints = track_trajectory(&model, &gripper, &task.settings.ik).unwrap();
        let s = path_parameter(&task.trajectory);
        let g = task.settings.gravity;
        let with = torque_effort(&model, &joints, grasp, &task.spec.object, &s, &g, None).unwrap();
        let nearly_none = task.spec.object.scaled(1e-9).unwrap();
        let without = torque_effort(&model, &joints, grasp, &nearly_none, &s, &g, None).unwrap();
        assert!(with.integral > without.integral, "{name}");

        // static load at every waypoint grows with the object's mass
        let heavy = grasp.payload_inertia(&task.spec.object.scaled(2.0).unwrap());
        let base = grasp.payload_inertia(&task.spec.object);
        for q in &joints.positions {
            let a = gravity_vector(&model, q, &g, Some(&base)).unwrap().norm_squared();
            let b = gravity_vector(&model, q, &g, Some(&heavy)).unwrap().norm_squared();
            assert!(b >= a, "{name}");
        }
    }
}

#[test]
fn profiles_integrate_by_trapezoid() {
    let model = support::arm7();
    let task = support::load_reference("task3", None);
    let card = evaluate_grasp(&model, &task.trajectory, &task.grasps[5], &task.spec.object, &task.settings).unwrap();
    let p = card.profiles.unwrap();
    for m in [&p.tov, &p.tme, &p.tem] {
        assert_eq!(m.values.len(), task.trajectory.len());
        assert!((m.integral - trapezoid_oracle(&m.values, &p.s)).abs() <= 1e-12 * m.integral.abs().max(1.0));
        assert!(m.values.iter().all(|v| v.is_finite()));
    }
    assert!(p.tov.values.iter().all(|v| *v > 0.0));
}

#[test]
fn permuting_grasps_permutes_scorecards() {
    let model = support::arm7();
    let task = support::load_reference("task3", None);
    let forward = evaluate_grasps(&model, &task.trajectory, &task.grasps, &task.spec.object, &task.settings).unwrap();
    let reversed: Vec<_> = task.grasps.iter().rev().cloned().collect();
    let backward = evaluate_grasps(&model, &task.trajectory, &reversed, &task.spec.object, &task.settings).unwrap();
    for (a, b) in forward.iter().zip(backward.iter().rev()) {
        assert_eq!(a, b);
    }
}

proptest! {
    #[test]
    fn radius_lies_between_extreme_eigenvalues(
        entries in prop::collection::vec(-1.0f64..1.0, 42),
        dir in prop::collection::vec(-1.0f64..1.0, 6),
    ) {
        let j = DMatrix::from_vec(6, 7, entries);
        let u = DVector::from_vec(dir);
        prop_assume!(u.norm() > 1e-3);
        let u = unit(u);
        let eig = (&j * j.transpose()).symmetric_eigen();
        prop_assume!(eig.eigenvalues.min() > 1e-8);
        let a2 = directional_manipulability(&j, &u).unwrap();
        prop_assert!(a2 > 0.0);
        prop_assert!(a2 >= eig.eigenvalues.min() * (1.0 - 1e-9));
        prop_assert!(a2 <= eig.eigenvalues.max() * (1.0 + 1e-9));
    }
}
