//! Real-time robot control framework with a simulated three-finger robot.
//!
//! * [`timeseries`] and [`robot`]: synchronized action/observation histories,
//!   the front-end, the real-time and non-real-time back-end, logging.
//! * [`types`], [`safety`], [`kinematics`], [`sim`]: the three-finger robot,
//!   its safety checks and a joint-level simulator implementing the driver.
//! * [`grasp`], [`control`], [`object_sim`]: center-of-mass wrench PD,
//!   friction-cone QP force distribution, fingertip impedance control and a
//!   rigid cube to close the loop.
//! * [`env`]: step/reset environments over any front-end plus the reaching task.

pub mod clock;
pub mod config;
pub mod control;
pub mod env;
pub mod experiment;
pub mod grasp;
pub mod kinematics;
pub mod object_sim;
pub mod robot;
pub mod safety;
pub mod sim;
pub mod timeseries;
pub mod types;
