//! Deterministic fixed-timestep simulation of the omnidirectional base.

mod episode;
mod joystick;
mod pose;
mod script;
mod world;

pub use episode::{
    run_episode, EpisodeReport, InputMode, SimConfig, Simulation, StepOutput, TraceSample,
    WaypointChaser, DEFAULT_DT, GAZE_PERIOD,
};
pub use joystick::{joystick_to_velocity, JoystickInput, DEFAULT_JOYSTICK_V_MAX, DEFAULT_JOYSTICK_W_MAX};
pub use pose::{integrate, normalize_angle, Pose};
pub use script::{
    InputEvent, InputKind, InputScript, Waypoint, DEFAULT_ARRIVE_RADIUS, SCRIPT_SCHEMA_VERSION,
};
pub use world::{resolve_collision, Footprint, Rect, WorldModel};
