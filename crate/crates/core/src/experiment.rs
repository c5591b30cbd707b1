//! Closed-loop runs of the grasp tasks, the reaching task and the
//! throughput benchmarks, shared by the command-line tool and the tests.
//!
//! Grasp loop, one iteration per robot cycle `t`:
//!
//! ```text
//! set finger reaction forces -f_t, append a_t, read y_t
//! object_{t+1} = object_step(object_t, f_t)
//! (a_{t+1}, f_{t+1}) = control(object_{t+1}, y_t, desired((t+1)Δ))
//! ```
//!
//! `f_t` are the contact forces the fingertips exert on the cube while
//! `a_t` is applied; the fingers feel the opposite forces. The object state
//! handed to the controller is the simulator's state at the start of the
//! cycle the new action applies to. Feeding it one cycle late makes the
//! default angular damping unstable on the small cube.

use std::io::Write;
use std::time::Instant;

use nalgebra::{Vector3, UnitQuaternion};
use thiserror::Error;

use crate::config::RunConfig;
use crate::control::{
    circle_trajectory, cube_face_contacts, lift_trajectory, ControlOutput, ForceSource, GraspController,
    ObjectTrajectory,
};
use crate::env::{ik_configuration, ik_seed, run_scripted_episode, EpisodeSummary, ReachEnv, RobotSetup};
use crate::grasp::{solve_qp, GraspQp};
use crate::kinematics::TriFingerGeometry;
use crate::object_sim::object_step;
use crate::robot::logger::format_float;
use crate::robot::{ExitReason, RobotError};
use crate::types::{JointVector, TriFingerAction, NUM_FINGERS, NUM_JOINTS};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("setup failed: {0}")]
    Setup(String),
    #[error("robot shut down: {0}")]
    Shutdown(String),
    #[error("grasp QP infeasible for more than the hold budget, aborted at cycle {0}")]
    QpInfeasible(usize),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot write output: {0}")]
    Csv(#[from] csv::Error),
}

impl RunConfig {
    pub fn geometry(&self) -> TriFingerGeometry {
        TriFingerGeometry::new(&self.geometry)
    }

    pub fn robot_setup(&self) -> RobotSetup {
        RobotSetup {
            geometry: self.geometry(),
            sim: self.sim.clone(),
            safety: self.safety.clone(),
            backend: self.backend.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectTask {
    Lift,
    Circle,
}

impl ObjectTask {
    pub fn name(self) -> &'static str {
        match self {
            ObjectTask::Lift => "lift",
            ObjectTask::Circle => "circle",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectTaskReport {
    pub task: ObjectTask,
    pub cycles: usize,
    /// Actual minus desired center of mass at the end of the run, m.
    pub final_error: Vector3<f64>,
    /// RMS of the horizontal position error over the run, m.
    pub rms_planar_error: f64,
    /// RMS of the full position error over the run, m.
    pub rms_error: f64,
    /// Largest `‖Ay − b‖` over all cycles with a fresh QP solution.
    pub max_equality_residual: f64,
    /// Largest pyramid violation `max(Gy − h)` over those cycles.
    pub max_cone_violation: f64,
    /// Cycles that reused stale forces after an infeasible QP.
    pub held_cycles: usize,
}

fn trajectory_header() -> Vec<String> {
    let mut h: Vec<String> = ["t", "time"].map(String::from).to_vec();
    for p in ["desired", "actual"] {
        for c in ["x", "y", "z", "qw", "qx", "qy", "qz"] {
            h.push(format!("{p}_{c}"));
        }
    }
    for c in ["force_x", "force_y", "force_z", "moment_x", "moment_y", "moment_z"] {
        h.push(c.into());
    }
    for i in 0..NUM_FINGERS {
        for c in ["x", "y", "z"] {
            h.push(format!("tip_force_{i}_{c}"));
        }
    }
    h.extend((0..NUM_JOINTS).map(|j| format!("torque_{j}")));
    h.push("equality_residual".into());
    h.push("active_set".into());
    h.push("force_source".into());
    h
}

fn push_pose(row: &mut Vec<String>, p: &Vector3<f64>, q: &UnitQuaternion<f64>) {
    row.extend(p.iter().map(|x| format_float(*x)));
    let q = q.quaternion();
    row.extend([q.w, q.i, q.j, q.k].iter().map(|x| format_float(*x)));
}

fn source_name(s: ForceSource) -> String {
    match s {
        ForceSource::Solved => "solved".into(),
        ForceSource::Held { stale_cycles } => format!("held_{stale_cycles}"),
        ForceSource::Dropped => "dropped".into(),
    }
}

/// Runs the lift or circle task for `duration` seconds. When `csv` is given
/// one row per cycle is written to it.
pub fn run_object_task(
    cfg: &RunConfig,
    task: ObjectTask,
    duration: f64,
    csv: Option<&mut dyn Write>,
) -> Result<ObjectTaskReport, ExperimentError> {
    let delta = cfg.backend.delta;
    let cycles = (duration / delta).round() as usize;
    if cycles == 0 {
        return Err(ExperimentError::Setup("duration is shorter than one cycle".into()));
    }
    let geometry = cfg.geometry();
    let cube = cfg.cube;
    let contacts = cube_face_contacts(cube.edge, cube.mu).map_err(|e| ExperimentError::Setup(e.to_string()))?;
    let mut object = cube.resting_state(0.0, 0.0);
    let trajectory: Box<dyn ObjectTrajectory> = match task {
        ObjectTask::Lift => Box::new(lift_trajectory(object.position, cfg.lift.height, cfg.lift.duration)),
        ObjectTask::Circle => Box::new(circle_trajectory(object.position, cfg.circle.radius, cfg.circle.period)),
    };

    let tips: [Vector3<f64>; NUM_FINGERS] = std::array::from_fn(|i| object.world_point(&contacts.contacts[i].location));
    let q0 = initial_grasp_configuration(cfg, &geometry, &tips)?;
    let robot = cfg.robot_setup().start(q0);
    let mut controller = GraspController::new(geometry, contacts, cfg.control.wrench, cfg.control.tip);

    let mut writer = csv.map(csv::Writer::from_writer);
    if let Some(w) = writer.as_mut() {
        w.write_record(trajectory_header())?;
    }

    let mut report = ObjectTaskReport {
        task,
        cycles: 0,
        final_error: Vector3::zeros(),
        rms_planar_error: 0.0,
        rms_error: 0.0,
        max_equality_residual: 0.0,
        max_cone_violation: 0.0,
        held_cycles: 0,
    };
    let mut sum_planar = 0.0;
    let mut sum_full = 0.0;
    let mut out: ControlOutput = controller.control_step(&object, &trajectory.sample(0.0), &robot.initial_observation);
    let mut row = Vec::new();
    for t in 0..cycles {
        let time = t as f64 * delta;
        let desired = trajectory.sample(time);
        let error = object.position - desired.position;
        sum_planar += error.x * error.x + error.y * error.y;
        sum_full += error.norm_squared();
        match out.source {
            ForceSource::Solved => {
                if let Some(qp) = &out.qp {
                    report.max_equality_residual = report.max_equality_residual.max(qp.equality_residual);
                    report.max_cone_violation = report.max_cone_violation.max(qp.max_violation);
                }
            }
            ForceSource::Held { .. } => report.held_cycles += 1,
            ForceSource::Dropped => {
                robot.stop();
                return Err(ExperimentError::QpInfeasible(t));
            }
        }

        robot.set_external_forces(out.tip_forces.map(|f| -f));
        let step = robot.append_desired_action(out.action).and_then(|i| robot.get_observation(i));
        let y = match step {
            Ok(y) => y,
            Err(RobotError::Shutdown(msg)) => return Err(ExperimentError::Shutdown(msg)),
            Err(e) => return Err(ExperimentError::Shutdown(e.to_string())),
        };

        if let Some(w) = writer.as_mut() {
            row.clear();
            row.push(t.to_string());
            row.push(format_float(time));
            push_pose(&mut row, &desired.position, &desired.orientation);
            push_pose(&mut row, &object.position, &object.orientation);
            row.extend(out.force.iter().chain(out.moment.iter()).map(|x| format_float(*x)));
            row.extend(out.tip_forces.iter().flat_map(|f| f.iter()).map(|x| format_float(*x)));
            row.extend(out.action.torque.iter().map(|x| format_float(*x)));
            row.push(out.qp.as_ref().map_or(String::new(), |q| format_float(q.equality_residual)));
            // Active pyramid rows, `;`-separated.
            row.push(out.qp.as_ref().map_or(String::new(), |q| {
                q.active_set.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(";")
            }));
            row.push(source_name(out.source));
            w.write_record(&row)?;
        }

        object = object_step(&object, &out.tip_forces, &cube, delta);
        out = controller.control_step(&object, &trajectory.sample(time + delta), &y);
        report.cycles += 1;
    }

    let exit = robot.stop();
    if let ExitReason::Shutdown(msg) = exit.reason {
        return Err(ExperimentError::Shutdown(msg));
    }
    if let Some(mut w) = writer {
        w.flush()?;
    }
    report.final_error = object.position - trajectory.sample(cycles as f64 * delta).position;
    report.rms_planar_error = (sum_planar / cycles as f64).sqrt();
    report.rms_error = (sum_full / cycles as f64).sqrt();
    Ok(report)
}

/// Joint positions putting every fingertip on its contact point, checked
/// against the joint limits.
pub fn initial_grasp_configuration(
    cfg: &RunConfig,
    geometry: &TriFingerGeometry,
    tips: &[Vector3<f64>; NUM_FINGERS],
) -> Result<JointVector, ExperimentError> {
    let q = ik_configuration(geometry, tips, &ik_seed(), &cfg.control.ik);
    for (i, finger) in geometry.fingers.iter().enumerate() {
        let qi = q.fixed_rows::<3>(3 * i).into_owned();
        if (finger.forward_kinematics(&qi) - tips[i]).norm() > 1e-4 {
            return Err(ExperimentError::Setup(format!("finger {i} cannot reach its contact point")));
        }
    }
    for j in 0..NUM_JOINTS {
        if q[j] < cfg.safety.position_lower[j] || q[j] > cfg.safety.position_upper[j] {
            return Err(ExperimentError::Setup(format!("grasp configuration violates the limits of joint {j}")));
        }
    }
    Ok(q)
}

/// Runs `episodes` reaching episodes with the scripted IK policy. Episode
/// `i` draws its targets from the stream seeded with `seed`.
pub fn run_reach(cfg: &RunConfig, episodes: usize, seed: u64) -> Result<Vec<EpisodeSummary>, ExperimentError> {
    let mut env = ReachEnv::new(cfg.robot_setup(), cfg.env.clone(), cfg.control.ik, seed).map_err(ExperimentError::Setup)?;
    let mut rows = Vec::with_capacity(episodes);
    for episode in 0..episodes {
        rows.push(run_scripted_episode(&mut env, episode).map_err(ExperimentError::Shutdown)?);
    }
    if let Some(exit) = env.close() {
        if let ExitReason::Shutdown(msg) = exit.reason {
            return Err(ExperimentError::Shutdown(msg));
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchReport {
    pub loop_cycles: usize,
    /// Full cycles (append, back-end, driver with safety chain, observation)
    /// per second of wall time.
    pub loop_cycles_per_second: f64,
    pub qp_samples: usize,
    /// Median wall time of one cold QP solve for the three-finger grasp, s.
    pub qp_median_seconds: f64,
}

/// Times `cycles` iterations of the lock-step user loop against the
/// simulated robot.
pub fn bench_loop(cfg: &RunConfig, cycles: usize) -> Result<f64, ExperimentError> {
    let q0 = ik_seed();
    let robot = cfg.robot_setup().start(q0);
    let action = TriFingerAction::from_position(q0);
    let start = Instant::now();
    for _ in 0..cycles {
        let t = robot.append_desired_action(action).map_err(|e| ExperimentError::Shutdown(e.to_string()))?;
        robot.get_observation(t).map_err(|e| ExperimentError::Shutdown(e.to_string()))?;
    }
    let elapsed = start.elapsed().as_secs_f64();
    robot.stop();
    Ok(cycles as f64 / elapsed)
}

/// Median time of `samples` cold solves of the cube grasp QP under varying
/// wrenches.
pub fn bench_qp(cfg: &RunConfig, samples: usize) -> Result<f64, ExperimentError> {
    let contacts = cube_face_contacts(cfg.cube.edge, cfg.cube.mu).map_err(|e| ExperimentError::Setup(e.to_string()))?;
    let weight = cfg.cube.mass * 9.81;
    let mut times = Vec::with_capacity(samples);
    for i in 0..samples {
        let s = i as f64 * 0.37;
        let force = Vector3::new(0.2 * s.sin(), 0.2 * (1.3 * s).cos(), weight * (1.0 + 0.3 * (0.7 * s).sin()));
        let moment = Vector3::new(0.004 * (0.5 * s).cos(), 0.003 * s.sin(), 0.002 * (0.9 * s).cos());
        let qp = GraspQp::for_wrench(&contacts, &force, &moment).map_err(|e| ExperimentError::Setup(e.to_string()))?;
        let start = Instant::now();
        let sol = std::hint::black_box(solve_qp(std::hint::black_box(&qp)));
        times.push(start.elapsed().as_secs_f64());
        std::hint::black_box(sol);
    }
    times.sort_by(f64::total_cmp);
    Ok(times.get(samples / 2).copied().unwrap_or(f64::NAN))
}

pub fn run_bench(cfg: &RunConfig, loop_cycles: usize, qp_samples: usize) -> Result<BenchReport, ExperimentError> {
    Ok(BenchReport {
        loop_cycles,
        loop_cycles_per_second: bench_loop(cfg, loop_cycles)?,
        qp_samples,
        qp_median_seconds: bench_qp(cfg, qp_samples)?,
    })
}

/// `metric,value,unit` CSV.
pub fn write_bench_report<W: Write>(writer: W, report: &BenchReport) -> Result<(), csv::Error> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(["metric", "value", "unit"])?;
    csv.write_record(["loop_cycles", &report.loop_cycles.to_string(), "cycles"])?;
    csv.write_record(["loop_throughput", &format!("{:.1}", report.loop_cycles_per_second), "cycles_per_second"])?;
    csv.write_record(["qp_samples", &report.qp_samples.to_string(), "solves"])?;
    csv.write_record(["qp_median_latency", &format!("{:.3}", report.qp_median_seconds * 1e6), "microseconds"])?;
    csv.flush()?;
    Ok(())
}
