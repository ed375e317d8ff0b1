//! JSON input schemas, result files, and the evaluation pipeline behind the
//! `evaluate` command.
//!
//! Every input document carries `"schema_version": 1` and unknown fields are
//! rejected. Inertia tensors are written as `[xx, yy, zz, xy, xz, yz]` and
//! orientations as quaternions `[w, x, y, z]`.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DVector, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::chain::{ChainModel, JointKind, JointSpec, LinkSpec, Segment};
use crate::dynamics::STANDARD_GRAVITY;
use crate::error::{Error, Result};
use crate::geometry::{Pose, PoseRecord};
use crate::ik::{IkSettings, TaskSpace};
use crate::metrics::{evaluate_grasps, EvaluationSettings, GraspScorecard, Quadrature};
use crate::ranking::{rank, scores_of, GraspScores, RankingReport, Weights, OBJECTIVES};
use crate::task::{generate_grasp_sweep, GraspCandidate, RigidObject, TaskTrajectory};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_RESAMPLE_COUNT: usize = 50;
pub const DEFAULT_TOTAL_TIME: f64 = 5.0;

fn check_version(version: u32, file: &str) -> Result<()> {
    if version != SCHEMA_VERSION {
        return Err(Error::Schema {
            path: format!("{file}: schema_version"),
            message: format!("unsupported version {version} (expected {SCHEMA_VERSION})"),
        });
    }
    Ok(())
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Schema {
        path: path.into(),
        message: message.into(),
    }
}

fn with_path(e: Error, path: &str) -> Error {
    match e {
        Error::Schema { path: p, message } => schema(format!("{path}.{p}"), message),
        Error::InvalidInput(m) | Error::InvalidModel(m) => schema(path, m),
        other => other,
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str, file: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|source| Error::Parse {
        file: file.to_string(),
        source,
    })
}

fn inertia_from_record(r: &[f64; 6]) -> Matrix3<f64> {
    let [xx, yy, zz, xy, xz, yz] = *r;
    Matrix3::new(xx, xy, xz, xy, yy, yz, xz, yz, zz)
}

fn inertia_to_record(m: &Matrix3<f64>) -> [f64; 6] {
    [m[(0, 0)], m[(1, 1)], m[(2, 2)], m[(0, 1)], m[(0, 2)], m[(1, 2)]]
}

fn pose_at(r: &PoseRecord, path: &str) -> Result<Pose> {
    r.to_pose().map_err(|e| with_path(e, path))
}

// ---------------------------------------------------------------- robot

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotFile {
    pub schema_version: u32,
    pub name: String,
    pub base_pose: PoseRecord,
    pub joints: Vec<JointRecord>,
    pub links: Vec<LinkRecord>,
    pub tool_transform: PoseRecord,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointRecord {
    pub kind: JointKind,
    pub axis: [f64; 3],
    pub origin: PoseRecord,
    pub limits: [f64; 2],
    pub velocity_limit: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkRecord {
    pub mass: f64,
    pub com: [f64; 3],
    pub inertia: [f64; 6],
}

impl RobotFile {
    pub fn to_model(&self) -> Result<ChainModel> {
        check_version(self.schema_version, "robot")?;
        if self.joints.len() != self.links.len() {
            return Err(schema(
                "links",
                format!("{} links for {} joints", self.links.len(), self.joints.len()),
            ));
        }
        let mut segments = Vec::with_capacity(self.joints.len());
        for (i, (j, l)) in self.joints.iter().zip(&self.links).enumerate() {
            segments.push(Segment {
                joint: JointSpec {
                    kind: j.kind,
                    axis: Vector3::from(j.axis),
                    origin: pose_at(&j.origin, &format!("joints[{i}].origin"))?,
                    limits: j.limits,
                    velocity_limit: j.velocity_limit,
                },
                link: LinkSpec {
                    mass: l.mass,
                    com: Vector3::from(l.com),
                    inertia: inertia_from_record(&l.inertia),
                },
            });
        }
        ChainModel::new(
            self.name.clone(),
            pose_at(&self.base_pose, "base_pose")?,
            segments,
            pose_at(&self.tool_transform, "tool_transform")?,
        )
    }

    pub fn from_model(model: &ChainModel) -> Self {
        let segs = model.segments();
        Self {
            schema_version: SCHEMA_VERSION,
            name: model.name.clone(),
            base_pose: (&model.base_pose).into(),
            joints: segs
                .iter()
                .map(|s| JointRecord {
                    kind: s.joint.kind,
                    axis: s.joint.axis.into(),
                    origin: (&s.joint.origin).into(),
                    limits: s.joint.limits,
                    velocity_limit: s.joint.velocity_limit,
                })
                .collect(),
            links: segs
                .iter()
                .map(|s| LinkRecord {
                    mass: s.link.mass,
                    com: s.link.com.into(),
                    inertia: inertia_to_record(&s.link.inertia),
                })
                .collect(),
            tool_transform: (&model.tool_transform).into(),
        }
    }
}

pub fn parse_robot(text: &str, file: &str) -> Result<ChainModel> {
    let doc: RobotFile = parse(text, file)?;
    doc.to_model().map_err(|e| with_path(e, file))
}

pub fn load_robot(path: impl AsRef<Path>) -> Result<ChainModel> {
    let path = path.as_ref();
    parse_robot(&read(path)?, &path.display().to_string())
}

/// Canonical JSON form of a model.
pub fn robot_to_json(model: &ChainModel) -> String {
    let mut s = serde_json::to_string_pretty(&RobotFile::from_model(model))
        .expect("robot records always serialize");
    s.push('\n');
    s
}

// ---------------------------------------------------------------- task

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskFile {
    pub schema_version: u32,
    pub name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_time_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gravity: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resample_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ik_seed: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task_space: Option<TaskSpace>,
    pub object: ObjectRecord,
    pub object_waypoints: Vec<WaypointRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grasps: Option<Vec<GraspRecord>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectRecord {
    pub mass: f64,
    /// About the CoM; derived from `extents` as a uniform box when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inertia: Option<[f64; 6]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extents: Option<[f64; 3]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaypointRecord {
    pub t: f64,
    pub translation: [f64; 3],
    pub quaternion: [f64; 4],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraspRecord {
    pub id: String,
    pub translation: [f64; 3],
    pub quaternion: [f64; 4],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRecord {
    pub start: PoseRecord,
    pub end: PoseRecord,
    pub count: usize,
}

/// Standalone grasp list used to replace a task's grasps.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraspSetFile {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grasps: Option<Vec<GraspRecord>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GraspSource {
    List(Vec<GraspCandidate>),
    Sweep { start: Pose, end: Pose, count: usize },
}

impl GraspSource {
    fn from_records(grasps: &Option<Vec<GraspRecord>>, sweep: &Option<SweepRecord>) -> Result<Self> {
        match (grasps, sweep) {
            (Some(list), None) => {
                if list.is_empty() {
                    return Err(schema("grasps", "at least one grasp required"));
                }
                let mut seen = BTreeSet::new();
                let mut out = Vec::with_capacity(list.len());
                for (i, g) in list.iter().enumerate() {
                    if !seen.insert(g.id.as_str()) {
                        return Err(schema(format!("grasps[{i}].id"), format!("duplicate id '{}'", g.id)));
                    }
                    let pose = pose_at(
                        &PoseRecord {
                            translation: g.translation,
                            quaternion: g.quaternion,
                        },
                        &format!("grasps[{i}]"),
                    )?;
                    out.push(GraspCandidate::new(g.id.clone(), pose));
                }
                Ok(GraspSource::List(out))
            }
            (None, Some(s)) => {
                let src = GraspSource::Sweep {
                    start: pose_at(&s.start, "sweep.start")?,
                    end: pose_at(&s.end, "sweep.end")?,
                    count: s.count,
                };
                src.grasps().map_err(|e| with_path(e, "sweep.count"))?;
                Ok(src)
            }
            (Some(_), Some(_)) => Err(schema("grasps", "give either 'grasps' or 'sweep', not both")),
            (None, None) => Err(schema("grasps", "one of 'grasps' or 'sweep' is required")),
        }
    }

    fn to_records(&self) -> (Option<Vec<GraspRecord>>, Option<SweepRecord>) {
        match self {
            GraspSource::List(list) => (
                Some(
                    list.iter()
                        .map(|g| {
                            let p = PoseRecord::from(&g.object_to_gripper);
                            GraspRecord {
                                id: g.id.clone(),
                                translation: p.translation,
                                quaternion: p.quaternion,
                            }
                        })
                        .collect(),
                ),
                None,
            ),
            GraspSource::Sweep { start, end, count } => (
                None,
                Some(SweepRecord {
                    start: start.into(),
                    end: end.into(),
                    count: *count,
                }),
            ),
        }
    }

    pub fn grasps(&self) -> Result<Vec<GraspCandidate>> {
        match self {
            GraspSource::List(list) => Ok(list.clone()),
            GraspSource::Sweep { start, end, count } => generate_grasp_sweep(start, end, *count),
        }
    }
}

/// A validated task file.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskSpec {
    pub name: String,
    pub notes: Vec<String>,
    pub total_time: Option<f64>,
    pub gravity: Option<Vector3<f64>>,
    pub resample_count: Option<usize>,
    pub ik_seed: Option<DVector<f64>>,
    pub task_space: Option<TaskSpace>,
    pub object: RigidObject,
    /// Keyframes as written in the file.
    pub keyframes: TaskTrajectory,
    pub grasps: GraspSource,
}

impl TaskSpec {
    pub fn total_time_or_default(&self) -> f64 {
        self.total_time.unwrap_or(DEFAULT_TOTAL_TIME)
    }

    /// Keyframes densified to `count` waypoints (file value, then default).
    pub fn trajectory(&self, count: Option<usize>) -> Result<TaskTrajectory> {
        let n = count.or(self.resample_count).unwrap_or(DEFAULT_RESAMPLE_COUNT);
        self.keyframes.resample(n, self.total_time_or_default())
    }

    pub fn gravity_or_default(&self) -> Vector3<f64> {
        self.gravity.unwrap_or(STANDARD_GRAVITY)
    }
}

impl TaskFile {
    pub fn to_spec(&self) -> Result<TaskSpec> {
        check_version(self.schema_version, "task")?;
        if let Some(t) = self.total_time_s {
            if !(t > 0.0) || !t.is_finite() {
                return Err(schema("total_time_s", "must be positive"));
            }
        }
        if let Some(g) = self.gravity {
            if g.iter().any(|v| !v.is_finite()) {
                return Err(schema("gravity", "must be finite"));
            }
        }
        if let Some(n) = self.resample_count {
            if n < 2 {
                return Err(schema("resample_count", "must be at least 2"));
            }
        }
        let object = {
            let o = &self.object;
            let made = match (o.inertia, o.extents) {
                (Some(i), ext) => RigidObject::new(o.mass, inertia_from_record(&i)).map(|mut r| {
                    r.extents = ext;
                    r
                }),
                (None, Some(ext)) => RigidObject::uniform_cuboid(o.mass, ext),
                (None, None) => Err(Error::InvalidInput(
                    "either 'inertia' or 'extents' is required".into(),
                )),
            };
            made.map_err(|e| with_path(e, "object"))?
        };
        let mut times = Vec::with_capacity(self.object_waypoints.len());
        let mut poses = Vec::with_capacity(self.object_waypoints.len());
        for (i, w) in self.object_waypoints.iter().enumerate() {
            times.push(w.t);
            poses.push(pose_at(
                &PoseRecord {
                    translation: w.translation,
                    quaternion: w.quaternion,
                },
                &format!("object_waypoints[{i}]"),
            )?);
        }
        let keyframes =
            TaskTrajectory::new(times, poses).map_err(|e| with_path(e, "object_waypoints"))?;
        Ok(TaskSpec {
            name: self.name.clone(),
            notes: self.notes.clone(),
            total_time: self.total_time_s,
            gravity: self.gravity.map(Vector3::from),
            resample_count: self.resample_count,
            ik_seed: self.ik_seed.as_ref().map(|s| DVector::from_column_slice(s)),
            task_space: self.task_space,
            object,
            keyframes,
            grasps: GraspSource::from_records(&self.grasps, &self.sweep)?,
        })
    }

    pub fn from_spec(spec: &TaskSpec) -> Self {
        let (grasps, sweep) = spec.grasps.to_records();
        Self {
            schema_version: SCHEMA_VERSION,
            name: spec.name.clone(),
            notes: spec.notes.clone(),
            total_time_s: spec.total_time,
            gravity: spec.gravity.map(Into::into),
            resample_count: spec.resample_count,
            ik_seed: spec.ik_seed.as_ref().map(|s| s.iter().copied().collect()),
            task_space: spec.task_space,
            object: ObjectRecord {
                mass: spec.object.mass,
                inertia: Some(inertia_to_record(&spec.object.inertia)),
                extents: spec.object.extents,
            },
            object_waypoints: spec
                .keyframes
                .times()
                .iter()
                .zip(spec.keyframes.poses())
                .map(|(t, p)| {
                    let r = PoseRecord::from(p);
                    WaypointRecord {
                        t: *t,
                        translation: r.translation,
                        quaternion: r.quaternion,
                    }
                })
                .collect(),
            grasps,
            sweep,
        }
    }
}

pub fn parse_task(text: &str, file: &str) -> Result<TaskSpec> {
    let doc: TaskFile = parse(text, file)?;
    doc.to_spec().map_err(|e| with_path(e, file))
}

pub fn load_task(path: impl AsRef<Path>) -> Result<TaskSpec> {
    let path = path.as_ref();
    parse_task(&read(path)?, &path.display().to_string())
}

pub fn task_to_json(spec: &TaskSpec) -> String {
    let mut s = serde_json::to_string_pretty(&TaskFile::from_spec(spec))
        .expect("task records always serialize");
    s.push('\n');
    s
}

pub fn load_grasp_set(path: impl AsRef<Path>) -> Result<GraspSource> {
    let path = path.as_ref();
    let file = path.display().to_string();
    let doc: GraspSetFile = parse(&read(path)?, &file)?;
    check_version(doc.schema_version, &file)?;
    GraspSource::from_records(&doc.grasps, &doc.sweep).map_err(|e| with_path(e, &file))
}

// ---------------------------------------------------------------- outputs

/// Seventeen significant digits, enough to read back the exact value.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt_float(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?)
}

pub const SCORECARD_HEADER: [&str; 11] = [
    "grasp_id",
    "H_TOV",
    "H_TME",
    "H_TEM",
    "norm_TOV",
    "norm_TME",
    "norm_TEM",
    "feasible",
    "pareto",
    "unreachable_waypoints",
    "near_singular_waypoints",
];

pub fn write_scorecards(path: &Path, cards: &[GraspScorecard], ranking: Option<&RankingReport>) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(SCORECARD_HEADER)?;
    for (i, c) in cards.iter().enumerate() {
        let scalars = c.scalars();
        let norm = ranking.and_then(|r| r.normalized.values[i]);
        let pareto = ranking.is_some_and(|r| r.pareto.contains(&c.grasp_id));
        let singular = c.profiles.as_ref().map_or(0, |p| {
            p.tov.near_singular_count().max(p.tem.near_singular_count())
        });
        w.write_record([
            c.grasp_id.clone(),
            opt_float(scalars.map(|s| s[0])),
            opt_float(scalars.map(|s| s[1])),
            opt_float(scalars.map(|s| s[2])),
            opt_float(norm.map(|s| s[0])),
            opt_float(norm.map(|s| s[1])),
            opt_float(norm.map(|s| s[2])),
            c.feasible.to_string(),
            pareto.to_string(),
            c.unreachable_count().to_string(),
            singular.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the `grasp_id` and raw score columns of a scorecards file.
pub fn read_scorecards(path: impl AsRef<Path>) -> Result<Vec<GraspScores>> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| schema(path.display().to_string(), format!("missing column '{name}'")))
    };
    let (id, a, b, c, f) = (col("grasp_id")?, col("H_TOV")?, col("H_TME")?, col("H_TEM")?, col("feasible")?);
    let mut out = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let num = |k: usize| -> Result<f64> {
            rec[k].parse::<f64>().map_err(|e| {
                schema(
                    format!("{}: row {}, column {}", path.display(), row + 2, &headers[k]),
                    e.to_string(),
                )
            })
        };
        let feasible = &rec[f] == "true";
        out.push(GraspScores {
            id: rec[id].to_string(),
            scalars: if feasible { Some([num(a)?, num(b)?, num(c)?]) } else { None },
        });
    }
    Ok(out)
}

pub fn write_profile(path: &Path, cards: &[GraspScorecard], metric: usize, waypoints: usize) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut header = vec!["grasp_id".to_string()];
    header.extend((0..waypoints).map(|i| format!("wp{i}")));
    w.write_record(&header)?;
    for c in cards {
        let mut row = vec![c.grasp_id.clone()];
        match &c.profiles {
            Some(p) => {
                let values = match metric {
                    0 => &p.tov.values,
                    1 => &p.tme.values,
                    _ => &p.tem.values,
                };
                row.extend(values.iter().map(|v| format_float(*v)));
            }
            None => row.extend(std::iter::repeat_n(String::new(), waypoints)),
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Per-metric heatmaps (`profile_<metric>.csv`, grasps × waypoints) and the
/// long-format normalized scalars (`plot_long.csv`).
pub fn emit_plot_data(
    cards: &[GraspScorecard],
    ranking: Option<&RankingReport>,
    waypoints: usize,
    outdir: &Path,
) -> Result<()> {
    for (k, name) in OBJECTIVES.iter().enumerate() {
        write_profile(&outdir.join(format!("profile_{name}.csv")), cards, k, waypoints)?;
    }
    let mut w = csv_writer(&outdir.join("plot_long.csv"))?;
    w.write_record(["grasp_id", "metric", "value_normalized"])?;
    if let Some(r) = ranking {
        for (c, v) in cards.iter().zip(&r.normalized.values) {
            if let Some(v) = v {
                for (k, name) in OBJECTIVES.iter().enumerate() {
                    w.write_record([c.grasp_id.as_str(), name, &format_float(v[k])])?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfeasibleGrasp {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveTriple<T> {
    #[serde(rename = "TOV")]
    pub tov: T,
    #[serde(rename = "TME")]
    pub tme: T,
    #[serde(rename = "TEM")]
    pub tem: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarizedReport {
    pub weights: [f64; 3],
    pub ranking: Vec<crate::ranking::ScalarizedEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub task: String,
    pub robot: String,
    pub waypoints: usize,
    pub grasps: Vec<String>,
    pub infeasible: Vec<InfeasibleGrasp>,
    pub argbest: Option<ObjectiveTriple<String>>,
    pub pareto: Vec<String>,
    pub conflict: bool,
    pub normalization: Option<ObjectiveTriple<f64>>,
    pub scalarized: Option<ScalarizedReport>,
}

impl Report {
    pub fn new(
        task: &str,
        robot: &str,
        waypoints: usize,
        cards: &[GraspScorecard],
        ranking: Option<&RankingReport>,
    ) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            task: task.to_string(),
            robot: robot.to_string(),
            waypoints,
            grasps: cards.iter().map(|c| c.grasp_id.clone()).collect(),
            infeasible: cards
                .iter()
                .filter(|c| !c.feasible)
                .map(|c| InfeasibleGrasp {
                    id: c.grasp_id.clone(),
                    reason: c.reason.clone().unwrap_or_default(),
                })
                .collect(),
            argbest: ranking.map(|r| ObjectiveTriple {
                tov: r.argbest.tov.clone(),
                tme: r.argbest.tme.clone(),
                tem: r.argbest.tem.clone(),
            }),
            pareto: ranking.map(|r| r.pareto.clone()).unwrap_or_default(),
            conflict: ranking.is_some_and(|r| r.conflict),
            normalization: ranking.map(|r| ObjectiveTriple {
                tov: r.normalized.maxima[0],
                tme: r.normalized.maxima[1],
                tem: r.normalized.maxima[2],
            }),
            scalarized: ranking.and_then(|r| {
                r.scalarized.as_ref().map(|(w, entries)| ScalarizedReport {
                    weights: w.0,
                    ranking: entries.clone(),
                })
            }),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report always serializes");
        s.push('\n');
        s
    }
}

pub fn read_report(path: impl AsRef<Path>) -> Result<Report> {
    let path = path.as_ref();
    parse(&read(path)?, &path.display().to_string())
}

// ---------------------------------------------------------------- pipeline

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub robot: PathBuf,
    pub tasks: Vec<PathBuf>,
    pub out: PathBuf,
    pub resample: Option<usize>,
    pub ik_damping: Option<f64>,
    pub ik_max_iterations: Option<usize>,
    pub weights: Option<Weights>,
    pub allow_infeasible: bool,
    pub quadrature: Quadrature,
    pub grasps_override: Option<PathBuf>,
    /// Worker threads; `None` uses all cores.
    pub jobs: Option<usize>,
}

impl RunConfig {
    pub fn new(robot: impl Into<PathBuf>, tasks: Vec<PathBuf>, out: impl Into<PathBuf>) -> Self {
        Self {
            robot: robot.into(),
            tasks,
            out: out.into(),
            resample: None,
            ik_damping: None,
            ik_max_iterations: None,
            weights: None,
            allow_infeasible: false,
            quadrature: Quadrature::ArcLength,
            grasps_override: None,
            jobs: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.tasks.is_empty() {
            return Err(Error::InvalidInput("at least one task file is required".into()));
        }
        if let Some(n) = self.resample {
            if n < 2 {
                return Err(Error::InvalidInput("resample count must be at least 2".into()));
            }
        }
        if self.jobs == Some(0) {
            return Err(Error::InvalidInput("jobs must be at least 1".into()));
        }
        let mut stems = BTreeSet::new();
        for t in &self.tasks {
            if !stems.insert(output_name(t)) {
                return Err(Error::InvalidInput(format!(
                    "two task files map to the output directory '{}'",
                    output_name(t)
                )));
            }
        }
        Ok(())
    }

    /// Evaluation settings for a task under this configuration.
    pub fn settings_for(&self, task: &TaskSpec) -> EvaluationSettings {
        let mut ik = IkSettings {
            seed: task.ik_seed.clone(),
            task_space: task.task_space.unwrap_or_default(),
            ..IkSettings::default()
        };
        if let Some(d) = self.ik_damping {
            ik.damping = d;
        }
        if let Some(n) = self.ik_max_iterations {
            ik.max_iterations = n;
        }
        EvaluationSettings {
            ik,
            gravity: task.gravity_or_default(),
            quadrature: self.quadrature,
            ..EvaluationSettings::default()
        }
    }
}

/// Output subdirectory for a task file: its file stem.
pub fn output_name(task: &Path) -> String {
    task.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "task".into())
}

#[derive(Debug, Clone)]
pub struct TaskOutcome {
    pub name: String,
    pub dir: PathBuf,
    pub scorecards: Vec<GraspScorecard>,
    pub ranking: Option<RankingReport>,
    pub report: Report,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub tasks: Vec<TaskOutcome>,
}

impl RunSummary {
    pub fn infeasible_count(&self) -> usize {
        self.tasks.iter().map(|t| t.report.infeasible.len()).sum()
    }

    /// Process exit status: nonzero when a grasp was infeasible and that was
    /// not explicitly allowed.
    pub fn exit_code(&self, allow_infeasible: bool) -> i32 {
        if self.infeasible_count() > 0 && !allow_infeasible {
            2
        } else {
            0
        }
    }
}

/// Evaluates one task in memory.
pub fn evaluate_task(
    model: &ChainModel,
    task: &TaskSpec,
    grasps: &[GraspCandidate],
    config: &RunConfig,
) -> Result<(TaskTrajectory, Vec<GraspScorecard>, Option<RankingReport>)> {
    let trajectory = task.trajectory(config.resample)?;
    let settings = config.settings_for(task);
    let cards = evaluate_grasps(model, &trajectory, grasps, &task.object, &settings)?;
    let ranking = match rank(&scores_of(&cards), config.weights.as_ref()) {
        Ok(r) => Some(r),
        Err(Error::NoFeasibleGrasps) => None,
        Err(e) => return Err(e),
    };
    Ok((trajectory, cards, ranking))
}

fn run_tasks(config: &RunConfig) -> Result<RunSummary> {
    let model = load_robot(&config.robot)?;
    let override_grasps = match &config.grasps_override {
        Some(p) => Some(load_grasp_set(p)?.grasps()?),
        None => None,
    };
    let mut tasks = Vec::with_capacity(config.tasks.len());
    for path in &config.tasks {
        let spec = load_task(path)?;
        let grasps = match &override_grasps {
            Some(g) => g.clone(),
            None => spec.grasps.grasps()?,
        };
        let (trajectory, cards, ranking) = evaluate_task(&model, &spec, &grasps, config)?;
        let name = output_name(path);
        let dir = config.out.join(&name);
        fs::create_dir_all(&dir)?;
        write_scorecards(&dir.join("scorecards.csv"), &cards, ranking.as_ref())?;
        emit_plot_data(&cards, ranking.as_ref(), trajectory.len(), &dir)?;
        let report = Report::new(&spec.name, &model.name, trajectory.len(), &cards, ranking.as_ref());
        fs::write(dir.join("report.json"), report.to_json())?;
        tasks.push(TaskOutcome {
            name,
            dir,
            scorecards: cards,
            ranking,
            report,
        });
    }
    Ok(RunSummary { tasks })
}

/// Runs the full protocol and writes per-task results under `config.out`.
pub fn run_evaluation(config: &RunConfig) -> Result<RunSummary> {
    config.validate()?;
    match config.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?
            .install(|| run_tasks(config)),
        None => run_tasks(config),
    }
}
