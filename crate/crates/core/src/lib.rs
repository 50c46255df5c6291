//! Utility-based distributed circumnavigation for heterogeneous robot teams.
//!
//! Robots orbit a (possibly moving) target at a common radius, height and
//! angular speed while keeping angular gaps that reflect each robot's utility.
//! Every robot only looks at its two ring neighbours.

// `!(x < tol)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod control;
pub mod error;
pub mod formation;
pub mod geometry;
pub mod io;
pub mod simulation;

pub use control::{ControlGains, Setpoints};
pub use error::{Error, Result};
pub use formation::{Guideline, RobotId, Utility, UtilitySchedule};
pub use simulation::{run, RobotSpec, Scenario, TargetMotion, TrajectoryLog};
