//! Closed-loop simulation of a leader-follower team of underwater
//! vehicle-manipulator systems (UVMSs) rigidly transporting a common object
//! through a sphere world with static obstacles.
//!
//! The crate is organised around the pieces of the control architecture:
//!
//! - [`se3`]: Euler/rotation conversions, grasp Jacobians, pose errors.
//! - [`dynamics`]: hydrodynamic body models, their linear-in-parameters
//!   regressor forms, and the sea-current disturbance model.
//! - [`nav`]: sphere-world workspace, navigation function and the leader's
//!   desired-trajectory generator.
//! - [`observer`]: per-robot momentum-based estimation of the shared external
//!   disturbance wrench.
//! - [`controller`]: adaptive impedance control law with load sharing.
//! - [`estimator`]: the followers' prescribed-performance estimator of the
//!   object's desired trajectory.
//! - [`scenario`]: JSON scenario configuration and validation.
//! - [`sim`]: the rigid-grasp coupled dynamics and the deterministic
//!   closed-loop engine.
//! - [`log`]: run logs, derived metrics and CSV/JSON export.
//! - [`verify`]: self-contained numerical verification suites.

pub mod controller;
pub mod dynamics;
pub mod error;
pub mod estimator;
pub mod log;
pub mod nav;
pub mod observer;
pub mod scenario;
pub mod se3;
pub mod sim;
pub mod verify;

pub use error::SimError;
pub use scenario::{Scenario, ScenarioConfig, ValidationReport};
pub use sim::run_scenario;

