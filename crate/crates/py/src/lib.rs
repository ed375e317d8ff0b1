//! Python bindings for the grasp evaluation pipeline.
//!
//! Results come back as plain dicts and lists so they drop straight into
//! pandas or json without wrapper classes.

use std::path::PathBuf;

use graspeval::io::{self, RunConfig};
use graspeval::ranking::{self, GraspScores, RankingReport, Weights};
use graspeval::{Error, GraspScorecard};
use nalgebra::DVector;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

/// `(id, scores)`; `None` scores mark an infeasible grasp.
type Row = (String, Option<(f64, f64, f64)>);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(e) => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn weights(w: Option<(f64, f64, f64)>) -> PyResult<Option<Weights>> {
    w.map(|(a, b, c)| Weights::new([a, b, c])).transpose().map_err(to_py)
}

fn ranking_dict<'py>(py: Python<'py>, r: &RankingReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("pareto", r.pareto.clone())?;
    d.set_item("conflict", r.conflict)?;
    d.set_item("argbest", (r.argbest.tov.clone(), r.argbest.tme.clone(), r.argbest.tem.clone()))?;
    d.set_item("maxima", r.normalized.maxima.to_vec())?;
    d.set_item("normalized", r.normalized.values.iter().map(|v| v.map(|a| a.to_vec())).collect::<Vec<_>>())?;
    if let Some((_, entries)) = &r.scalarized {
        let order: Vec<(String, f64)> = entries.iter().map(|e| (e.id.clone(), e.score)).collect();
        d.set_item("scalarized", order)?;
    }
    Ok(d)
}

fn card_dict<'py>(py: Python<'py>, c: &GraspScorecard) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("id", c.grasp_id.clone())?;
    d.set_item("feasible", c.feasible)?;
    d.set_item("reason", c.reason.clone())?;
    if let Some(p) = &c.profiles {
        d.set_item("h_tov", p.tov.integral)?;
        d.set_item("h_tme", p.tme.integral)?;
        d.set_item("h_tem", p.tem.integral)?;
        d.set_item("tov", p.tov.values.clone())?;
        d.set_item("tme", p.tme.values.clone())?;
        d.set_item("tem", p.tem.values.clone())?;
        d.set_item("s", p.s.clone())?;
    }
    Ok(d)
}

/// Evaluates every grasp of one task and ranks them.
///
/// Returns `{"task", "robot", "waypoints", "grasps": [...], "ranking": {...} | None}`.
#[pyfunction]
#[pyo3(signature = (robot, task, resample=None, weights=None))]
fn evaluate<'py>(
    py: Python<'py>,
    robot: PathBuf,
    task: PathBuf,
    resample: Option<usize>,
    weights: Option<(f64, f64, f64)>,
) -> PyResult<Bound<'py, PyDict>> {
    let model = io::load_robot(&robot).map_err(to_py)?;
    let spec = io::load_task(&task).map_err(to_py)?;
    let grasps = spec.grasps.grasps().map_err(to_py)?;
    let mut config = RunConfig::new(&robot, vec![task.clone()], PathBuf::new());
    config.resample = resample;
    config.weights = self::weights(weights)?;
    config.validate().map_err(to_py)?;
    let (trajectory, cards, ranking) =
        py.detach(|| io::evaluate_task(&model, &spec, &grasps, &config)).map_err(to_py)?;

    let d = PyDict::new(py);
    d.set_item("task", spec.name.clone())?;
    d.set_item("robot", model.name.clone())?;
    d.set_item("waypoints", trajectory.len())?;
    let list = PyList::empty(py);
    for c in &cards {
        list.append(card_dict(py, c)?)?;
    }
    d.set_item("grasps", list)?;
    match &ranking {
        Some(r) => d.set_item("ranking", ranking_dict(py, r)?)?,
        None => d.set_item("ranking", py.None())?,
    }
    Ok(d)
}

/// Ranks `(id, H_TOV, H_TME, H_TEM)` rows. A row whose scores are `None`
/// counts as infeasible.
#[pyfunction]
#[pyo3(signature = (rows, weights=None))]
fn rank<'py>(
    py: Python<'py>,
    rows: Vec<Row>,
    weights: Option<(f64, f64, f64)>,
) -> PyResult<Bound<'py, PyDict>> {
    let scores: Vec<GraspScores> = rows
        .into_iter()
        .map(|(id, s)| GraspScores {
            id,
            scalars: s.map(|(a, b, c)| [a, b, c]),
        })
        .collect();
    let w = self::weights(weights)?;
    let r = ranking::rank(&scores, w.as_ref()).map_err(to_py)?;
    ranking_dict(py, &r)
}

/// Runs the full protocol and writes the usual artifacts under `out`.
/// Returns the exit status the command line tool would use.
#[pyfunction]
#[pyo3(signature = (robot, tasks, out, weights=None, jobs=None, allow_infeasible=false))]
fn run(
    py: Python<'_>,
    robot: PathBuf,
    tasks: Vec<PathBuf>,
    out: PathBuf,
    weights: Option<(f64, f64, f64)>,
    jobs: Option<usize>,
    allow_infeasible: bool,
) -> PyResult<i32> {
    let mut config = RunConfig::new(robot, tasks, out);
    config.weights = self::weights(weights)?;
    config.jobs = jobs;
    config.allow_infeasible = allow_infeasible;
    let summary = py.detach(|| io::run_evaluation(&config)).map_err(to_py)?;
    Ok(summary.exit_code(allow_infeasible))
}

/// Tool pose at `q` as `(translation, quaternion_wxyz)`.
#[pyfunction]
fn forward_kinematics(robot: PathBuf, q: Vec<f64>) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let model = io::load_robot(&robot).map_err(to_py)?;
    let pose = model.forward_kinematics(&DVector::from_vec(q)).map_err(to_py)?;
    Ok((pose.translation.as_slice().to_vec(), pose.rotation.wxyz().to_vec()))
}

#[pymodule]
fn pygraspeval(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(rank, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(forward_kinematics, m)?)?;
    Ok(())
}
