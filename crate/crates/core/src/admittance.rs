//! First-order admittance: virtual force in, desired body velocity out.
//!
//! A mass-damper with mass `M` and damping `D` driven by a constant force `F`
//! from rest follows `v(t) = F/D * (1 - exp(-t/tau))` with `tau = M/D`. The
//! discrete filter uses the exact zero-order-hold update of that system, so it
//! reproduces the closed form at every sample when the force is piecewise
//! constant.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intent::VirtualForce;
use crate::kinematics::{inverse_kinematics, BodyVelocity, RobotGeometry, WheelSpeeds};

pub const MAX_DT: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmittanceParams {
    /// Gaze stiffness `K` in N/m. Consumed by the intent stage.
    pub stiffness: f64,
    /// Virtual mass `M` in kg.
    pub virtual_mass: f64,
    /// Virtual damping `D` in N*s/m.
    pub damping: f64,
    /// Translational saturation in m/s, applied per component.
    pub v_max: f64,
}

impl Default for AdmittanceParams {
    fn default() -> Self {
        Self {
            stiffness: 10.0,
            virtual_mass: 10.0,
            damping: 20.0,
            v_max: 0.5,
        }
    }
}

impl AdmittanceParams {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("stiffness", self.stiffness),
            ("virtual_mass", self.virtual_mass),
            ("damping", self.damping),
            ("v_max", self.v_max),
        ];
        for (name, value) in checks {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and > 0, got {value}"
                )));
            }
        }
        Ok(())
    }

    pub fn tau(&self) -> f64 {
        self.virtual_mass / self.damping
    }

    /// Replace the damping between steps.
    pub fn set_damping(&mut self, damping: f64) -> Result<()> {
        let mut next = *self;
        next.damping = damping;
        next.validate()?;
        *self = next;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AdmittanceState {
    pub v: BodyVelocity,
    pub t_last: f64,
}

impl AdmittanceState {
    pub fn at_rest(t: f64) -> Self {
        Self {
            v: BodyVelocity::ZERO,
            t_last: t,
        }
    }
}

/// Closed-form response from rest under constant force. No saturation.
pub fn step_response(force: &VirtualForce, p: &AdmittanceParams, t: f64) -> BodyVelocity {
    let gain = if t.is_infinite() {
        1.0
    } else {
        -(-t / p.tau()).exp_m1()
    };
    BodyVelocity::new(force.fx / p.damping * gain, force.fy / p.damping * gain, 0.0)
}

pub fn saturate(v: BodyVelocity, v_max: f64) -> BodyVelocity {
    BodyVelocity::new(v.vx.clamp(-v_max, v_max), v.vy.clamp(-v_max, v_max), v.omega)
}

/// One exact-discretization step followed by per-component saturation. Yaw
/// stays at zero: gaze never commands rotation.
pub fn filter_step(
    s: &AdmittanceState,
    force: &VirtualForce,
    p: &AdmittanceParams,
    dt: f64,
) -> Result<AdmittanceState> {
    if !(dt > 0.0 && dt <= MAX_DT) {
        return Err(Error::InvalidTimestep(dt));
    }
    let decay = (-dt / p.tau()).exp();
    let gain = -(-dt / p.tau()).exp_m1();
    let v = BodyVelocity::new(
        s.v.vx * decay + force.fx / p.damping * gain,
        s.v.vy * decay + force.fy / p.damping * gain,
        0.0,
    );
    Ok(AdmittanceState {
        v: saturate(v, p.v_max),
        t_last: s.t_last + dt,
    })
}

/// Wheel targets for the filtered velocity.
pub fn desired_wheel_speeds(s: &AdmittanceState, geom: &RobotGeometry) -> Result<WheelSpeeds> {
    inverse_kinematics(&s.v, geom)
}
