//! Gaze-driven teleoperation of a mecanum base.
//!
//! The control path is: gaze sample → [`intent`] (dead-zone and virtual
//! force) → [`admittance`] (force to desired body velocity) →
//! [`kinematics`] (wheel targets) → [`sim`] (pose integration, collision,
//! goal detection). [`scenario`] loads the TOML description of a run.

pub mod admittance;
pub mod error;
pub mod intent;
pub mod kinematics;
pub mod scenario;
pub mod sim;

pub use error::{Error, Result};
