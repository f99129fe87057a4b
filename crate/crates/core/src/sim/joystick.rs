use serde::{Deserialize, Serialize};

use crate::kinematics::BodyVelocity;

/// Joystick baseline top speed, m/s.
pub const DEFAULT_JOYSTICK_V_MAX: f64 = 0.5;
/// Yaw rate at full deflection, rad/s.
pub const DEFAULT_JOYSTICK_W_MAX: f64 = 1.0;

/// Stick deflections, each clamped to [-1, 1]. Non-finite values read as 0.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct JoystickInput {
    pub axis_x: f64,
    pub axis_y: f64,
    pub axis_yaw: f64,
}

impl JoystickInput {
    pub fn new(axis_x: f64, axis_y: f64, axis_yaw: f64) -> Self {
        Self {
            axis_x: clamp_axis(axis_x),
            axis_y: clamp_axis(axis_y),
            axis_yaw: clamp_axis(axis_yaw),
        }
    }
}

fn clamp_axis(v: f64) -> f64 {
    if v.is_finite() {
        v.clamp(-1.0, 1.0)
    } else {
        0.0
    }
}

pub fn joystick_to_velocity(j: &JoystickInput, v_max: f64, w_max: f64) -> BodyVelocity {
    let j = JoystickInput::new(j.axis_x, j.axis_y, j.axis_yaw);
    BodyVelocity::new(j.axis_x * v_max, j.axis_y * v_max, j.axis_yaw * w_max)
}
