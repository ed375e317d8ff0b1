#![allow(dead_code)]

use std::path::PathBuf;

use graspeval::chain::{ChainModel, JointSpec, LinkSpec, Segment};
use graspeval::geometry::Pose;
use graspeval::io;
use nalgebra::{DVector, Vector3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn data_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel)
}

pub fn arm7() -> ChainModel {
    io::load_robot(data_path("robots/baxter_like_7dof.json")).unwrap()
}

pub fn reference_tasks() -> Vec<PathBuf> {
    ["task1", "task2", "task3"]
        .iter()
        .map(|t| data_path(&format!("tasks/{t}.json")))
        .collect()
}

/// Planar 2R with point masses at the link tips, joints about +z.
pub fn two_r(l1: f64, l2: f64, m1: f64, m2: f64) -> ChainModel {
    let z = Vector3::z();
    ChainModel::new(
        "2r",
        Pose::identity(),
        vec![
            Segment {
                joint: JointSpec::revolute(z, Pose::identity()),
                link: LinkSpec::point_mass(m1, Vector3::new(l1, 0.0, 0.0)),
            },
            Segment {
                joint: JointSpec::revolute(z, Pose::from_translation(l1, 0.0, 0.0)),
                link: LinkSpec::point_mass(m2, Vector3::new(l2, 0.0, 0.0)),
            },
        ],
        Pose::from_translation(l2, 0.0, 0.0),
    )
    .unwrap()
}

/// One prismatic joint along +x carrying a point mass at the tool.
pub fn slider(mass: f64) -> ChainModel {
    ChainModel::new(
        "slider",
        Pose::identity(),
        vec![Segment {
            joint: JointSpec::prismatic(Vector3::x(), Pose::identity()).with_limits(-2.0, 2.0),
            link: LinkSpec::point_mass(mass, Vector3::zeros()),
        }],
        Pose::identity(),
    )
    .unwrap()
}

pub fn random_q(model: &ChainModel, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_iterator(
        model.dof(),
        model.joints().map(|j| rng.gen_range(j.limits[0]..j.limits[1])),
    )
}

pub fn random_vec(n: usize, scale: f64, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.gen_range(-scale..scale))
}

/// Single revolute joint about +z with a point mass `mass` at distance `l`
/// on +x; the tool sits at the mass.
pub fn pendulum(l: f64, mass: f64) -> ChainModel {
    ChainModel::new(
        "pendulum",
        Pose::identity(),
        vec![Segment {
            joint: JointSpec::revolute(Vector3::z(), Pose::identity()),
            link: LinkSpec::point_mass(mass, Vector3::new(l, 0.0, 0.0)),
        }],
        Pose::from_translation(l, 0.0, 0.0),
    )
    .unwrap()
}

/// A reference task loaded with its densified trajectory, grasps and settings.
pub struct LoadedTask {
    pub spec: io::TaskSpec,
    pub trajectory: graspeval::task::TaskTrajectory,
    pub grasps: Vec<graspeval::task::GraspCandidate>,
    pub settings: graspeval::metrics::EvaluationSettings,
}

pub fn load_reference(name: &str, resample: Option<usize>) -> LoadedTask {
    let path = data_path(&format!("tasks/{name}.json"));
    let spec = io::load_task(&path).unwrap();
    let trajectory = spec.trajectory(resample).unwrap();
    let grasps = spec.grasps.grasps().unwrap();
    let settings = io::RunConfig::new(data_path("robots/baxter_like_7dof.json"), vec![path], "unused")
        .settings_for(&spec);
    LoadedTask {
        spec,
        trajectory,
        grasps,
        settings,
    }
}
