use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use nalgebra::DVector;
use serde_json::json;

use graspeval::dynamics::{gravity_vector, mass_matrix};
use graspeval::io::{self, RunConfig};
use graspeval::metrics::{evaluate_grasp, Quadrature};
use graspeval::ranking::{rank, Weights};

#[derive(Parser)]
#[command(name = "graspeval", version, about = "Evaluate and rank grasps over a post-grasp trajectory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate every grasp of every task and write per-task results.
    Evaluate {
        #[arg(long)]
        robot: PathBuf,
        /// Task file; repeat for several tasks.
        #[arg(long = "task", required = true)]
        tasks: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Waypoints per task after densification.
        #[arg(long)]
        resample: Option<usize>,
        /// Scalarization weights for (TOV, TME, TEM), e.g. 0.4,0.3,0.3.
        #[arg(long)]
        weights: Option<Weights>,
        #[arg(long)]
        allow_infeasible: bool,
        /// Integrate over waypoint index instead of arc length.
        #[arg(long)]
        index_quadrature: bool,
        /// Grasp set file replacing the grasps of every task.
        #[arg(long)]
        grasps_override: Option<PathBuf>,
        #[arg(long)]
        ik_damping: Option<f64>,
        #[arg(long)]
        ik_max_iterations: Option<usize>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Print forward kinematics, Jacobian, mass matrix and gravity torques.
    InspectModel {
        #[arg(long)]
        robot: PathBuf,
        /// Comma-separated joint positions (default: mid-range).
        #[arg(long, allow_hyphen_values = true)]
        q: Option<String>,
    },
    /// Print the three objectives at one waypoint of one grasp.
    MetricsAt {
        #[arg(long)]
        robot: PathBuf,
        #[arg(long)]
        task: PathBuf,
        #[arg(long)]
        grasp: String,
        #[arg(long)]
        waypoint: usize,
        #[arg(long)]
        resample: Option<usize>,
    },
    /// Re-rank an existing scorecards.csv.
    Pareto {
        #[arg(long)]
        scorecards: PathBuf,
        #[arg(long)]
        weights: Option<Weights>,
    },
}

fn parse_q(text: &str) -> Result<DVector<f64>> {
    let v: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .with_context(|| format!("bad joint vector '{text}'"))?;
    Ok(DVector::from_vec(v))
}

fn rows(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Evaluate {
            robot,
            tasks,
            out,
            resample,
            weights,
            allow_infeasible,
            index_quadrature,
            grasps_override,
            ik_damping,
            ik_max_iterations,
            jobs,
        } => {
            let config = RunConfig {
                resample,
                weights,
                allow_infeasible,
                quadrature: if index_quadrature {
                    Quadrature::Index
                } else {
                    Quadrature::ArcLength
                },
                grasps_override,
                ik_damping,
                ik_max_iterations,
                jobs,
                ..RunConfig::new(robot, tasks, out)
            };
            let summary = io::run_evaluation(&config)?;
            for t in &summary.tasks {
                let r = &t.report;
                println!(
                    "{}: {} grasps, {} infeasible, pareto [{}], conflict {}",
                    t.name,
                    r.grasps.len(),
                    r.infeasible.len(),
                    r.pareto.join(", "),
                    r.conflict
                );
                for g in &r.infeasible {
                    eprintln!("  {}: {}", g.id, g.reason);
                }
            }
            let code = summary.exit_code(allow_infeasible);
            if code != 0 {
                eprintln!("infeasible grasps present; pass --allow-infeasible to accept them");
            }
            Ok(ExitCode::from(code as u8))
        }
        Command::InspectModel { robot, q } => {
            let model = io::load_robot(&robot)?;
            let q = match q {
                Some(text) => parse_q(&text)?,
                None => model.mid_range(),
            };
            let pose = model.forward_kinematics(&q)?;
            let j = model.geometric_jacobian(&q)?;
            let m = mass_matrix(&model, &q)?;
            let g = gravity_vector(&model, &q, &graspeval::dynamics::STANDARD_GRAVITY, None)?;
            let doc = json!({
                "name": model.name,
                "dof": model.dof(),
                "q": q.as_slice(),
                "tool_pose": graspeval::geometry::PoseRecord::from(&pose),
                "jacobian": rows(&j),
                "mass_matrix": rows(&m),
                "gravity_torque": g.as_slice(),
            });
            println!("{}", serde_json::to_string_pretty(&doc)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::MetricsAt {
            robot,
            task,
            grasp,
            waypoint,
            resample,
        } => {
            let model = io::load_robot(&robot)?;
            let spec = io::load_task(&task)?;
            let config = RunConfig {
                resample,
                ..RunConfig::new(&robot, vec![task.clone()], ".")
            };
            let trajectory = spec.trajectory(resample)?;
            let candidate = spec
                .grasps
                .grasps()?
                .into_iter()
                .find(|g| g.id == grasp)
                .with_context(|| format!("no grasp '{grasp}' in {}", task.display()))?;
            if waypoint >= trajectory.len() {
                bail!("waypoint {waypoint} out of range (0..{})", trajectory.len());
            }
            let card = evaluate_grasp(&model, &trajectory, &candidate, &spec.object, &config.settings_for(&spec))?;
            let Some(p) = card.profiles else {
                bail!("grasp '{grasp}' is infeasible: {}", card.reason.unwrap_or_default());
            };
            let doc = json!({
                "grasp": grasp,
                "waypoint": waypoint,
                "t": trajectory.times()[waypoint],
                "s": p.s[waypoint],
                "q": p.joints.positions[waypoint].as_slice(),
                "qd": p.joints.velocities[waypoint].as_slice(),
                "qdd": p.joints.accelerations[waypoint].as_slice(),
                "reachable": p.joints.reachable[waypoint],
                "tov": p.tov.values[waypoint],
                "torque_sq": p.tme.values[waypoint],
                "effective_mass": p.tem.values[waypoint],
                "near_singular": p.tem.flags[waypoint].near_singular || p.tov.flags[waypoint].near_singular,
            });
            println!("{}", serde_json::to_string_pretty(&doc)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Pareto { scorecards, weights } => {
            let scores = io::read_scorecards(&scorecards)?;
            let r = rank(&scores, weights.as_ref())?;
            let doc = json!({
                "argbest": {"TOV": r.argbest.tov, "TME": r.argbest.tme, "TEM": r.argbest.tem},
                "pareto": r.pareto,
                "conflict": r.conflict,
                "scalarized": r.scalarized.map(|(w, e)| json!({"weights": w.0, "ranking": e})),
            });
            println!("{}", serde_json::to_string_pretty(&doc)?);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
