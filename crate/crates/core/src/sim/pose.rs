use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::kinematics::BodyVelocity;

/// Planar pose in the world frame. `theta` is kept in (-pi, pi].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.theta.is_finite()
    }

    /// Express a world point in this pose's body frame.
    pub fn world_to_body(&self, x: f64, y: f64) -> (f64, f64) {
        let (s, c) = self.theta.sin_cos();
        let dx = x - self.x;
        let dy = y - self.y;
        (c * dx + s * dy, -s * dx + c * dy)
    }

    pub fn distance_to(&self, other: &Pose) -> f64 {
        (other.x - self.x).hypot(other.y - self.y)
    }
}

pub fn normalize_angle(theta: f64) -> f64 {
    if !theta.is_finite() {
        return theta;
    }
    let mut a = theta % (2.0 * PI);
    if a <= -PI {
        a += 2.0 * PI;
    } else if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Dead-reckon a body twist over `dt` in the world frame.
pub fn integrate(pose: &Pose, v: &BodyVelocity, dt: f64) -> Pose {
    let (s, c) = pose.theta.sin_cos();
    Pose {
        x: pose.x + (v.vx * c - v.vy * s) * dt,
        y: pose.y + (v.vx * s + v.vy * c) * dt,
        theta: normalize_angle(pose.theta + v.omega * dt),
    }
}
