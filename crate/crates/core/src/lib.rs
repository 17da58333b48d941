//! Simulation and verification toolkit for aggregation of differential-drive
//! robot swarms driven by bimodal binary-sensor controllers.

pub mod aggregation;
pub mod contact;
pub mod counterexample;
pub mod experiments;
pub mod geometry;
pub mod io;
pub mod kinematics;
pub mod scenarios;
pub mod sensing;
pub mod simulator;
pub mod taxonomy;

pub use geometry::{BimodalController, MRState, RobotState, Vec2, WorldParams};
pub use simulator::{RunOutcome, SimConfig, Verdict};
