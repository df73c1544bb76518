//! Safe adaptive synchronization of a planar two-link arm to a
//! time-delayed human hand trajectory.
//!
//! The controller keeps the task-space error inside per-axis bounds with a
//! barrier-weighted feedback, learns the link lengths through integral
//! concurrent learning and the lumped dynamics through a leaky gradient
//! law. Everything runs in a deterministic fixed-step simulation.

pub mod cli;
pub mod config;
pub mod controller;
pub mod diagnostics;
pub mod error;
pub mod human_trajectory;
pub mod icl;
pub mod integrator;
pub mod linalg;
pub mod output;
pub mod registry;
pub mod robot_model;
pub mod simulator;

pub use config::{parse_config, SimConfig};
pub use error::SimError;
pub use simulator::{run, LogRecord, RunSummary, Simulator, Status};
