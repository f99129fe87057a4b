//! Forward and inverse kinematics of a four-wheel mecanum base.
//!
//! Conventions used throughout the crate:
//!
//! * body frame: `vx` longitudinal (operator "up/down"), `vy` lateral with
//!   left positive (operator "left/right"), `omega` yaw rate, counter-clockwise
//!   positive;
//! * wheel order: front-left, front-right, rear-left, rear-right;
//! * `roller_angle` is in radians and strictly inside (0, pi/2).
//!
//! Both maps are normalized so that `forward(inverse(v)) == v`. The inverse map
//! carries the `1/R` factor and positive equal wheel speeds drive the base
//! forward. The uncorrected form, where the forward map has a leading `-R/4`
//! and the inverse has no `1/R`, is kept in [`uncorrected_forward_matrix`] and
//! [`uncorrected_inverse_matrix`] so the consistency report can show that it
//! composes to `-R * I`.

use nalgebra::{Matrix3, Matrix3x4, Matrix4x3, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Residual bound for the 3x3 composition check.
pub const CONSISTENCY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotGeometry {
    /// Wheel radius `R` in meters.
    pub wheel_radius: f64,
    /// Angle between wheel axis and roller axis, radians.
    pub roller_angle: f64,
    /// Axle half-offset along the longitudinal axis, meters.
    pub d1: f64,
    /// Axle half-offset along the lateral axis, meters.
    pub d2: f64,
    pub footprint_length: f64,
    pub footprint_width: f64,
}

impl Default for RobotGeometry {
    /// Summit-XL-class base. The axle offsets and wheel radius are engineering
    /// defaults; only the 0.750 x 0.665 m footprint and the 45 degree roller
    /// angle come from the vehicle description.
    fn default() -> Self {
        Self {
            wheel_radius: 0.127,
            roller_angle: std::f64::consts::FRAC_PI_4,
            d1: 0.25,
            d2: 0.30,
            footprint_length: 0.750,
            footprint_width: 0.665,
        }
    }
}

impl RobotGeometry {
    pub fn new(wheel_radius: f64, roller_angle: f64, d1: f64, d2: f64) -> Result<Self> {
        let geom = Self {
            wheel_radius,
            roller_angle,
            d1,
            d2,
            ..Self::default()
        };
        geom.validate()?;
        Ok(geom)
    }

    pub fn with_footprint(mut self, length: f64, width: f64) -> Result<Self> {
        self.footprint_length = length;
        self.footprint_width = width;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("wheel_radius", self.wheel_radius),
            ("d1", self.d1),
            ("d2", self.d2),
            ("footprint_length", self.footprint_length),
            ("footprint_width", self.footprint_width),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidGeometry(format!(
                    "{name} must be finite and > 0, got {value}"
                )));
            }
        }
        let a = self.roller_angle;
        if !(a.is_finite() && a > 0.0 && a < std::f64::consts::FRAC_PI_2) {
            return Err(Error::InvalidGeometry(format!(
                "roller_angle must lie strictly inside (0, pi/2) rad, got {a}"
            )));
        }
        Ok(())
    }

    /// `d1 + d2 * cot(alpha)`, the lever arm of the yaw column.
    pub fn yaw_lever(&self) -> f64 {
        self.d1 + self.d2 / self.roller_angle.tan()
    }
}

/// Planar body twist.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BodyVelocity {
    pub vx: f64,
    pub vy: f64,
    pub omega: f64,
}

impl BodyVelocity {
    pub const ZERO: Self = Self {
        vx: 0.0,
        vy: 0.0,
        omega: 0.0,
    };

    pub fn new(vx: f64, vy: f64, omega: f64) -> Self {
        Self { vx, vy, omega }
    }

    pub fn is_finite(&self) -> bool {
        self.vx.is_finite() && self.vy.is_finite() && self.omega.is_finite()
    }

    /// Max-norm of the translational part.
    pub fn linear_inf_norm(&self) -> f64 {
        self.vx.abs().max(self.vy.abs())
    }

    fn as_vector(&self) -> Vector3<f64> {
        Vector3::new(self.vx, self.vy, self.omega)
    }
}

/// Wheel angular rates in rad/s, ordered front-left, front-right, rear-left,
/// rear-right.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct WheelSpeeds {
    pub w: [f64; 4],
}

impl WheelSpeeds {
    pub fn new(front_left: f64, front_right: f64, rear_left: f64, rear_right: f64) -> Self {
        Self {
            w: [front_left, front_right, rear_left, rear_right],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.w.iter().all(|w| w.is_finite())
    }

    fn as_vector(&self) -> Vector4<f64> {
        Vector4::from(self.w)
    }
}

/// 3x4 map from wheel speeds to body twist.
pub fn forward_matrix(geom: &RobotGeometry) -> Matrix3x4<f64> {
    let t = geom.roller_angle.tan();
    let l = 1.0 / geom.yaw_lever();
    let s = geom.wheel_radius / 4.0;
    Matrix3x4::new(
        s, s, s, s, //
        -s * t, s * t, -s * t, s * t, //
        s * l, -s * l, -s * l, s * l,
    )
}

/// 4x3 map from body twist to wheel speeds (includes `1/R`).
pub fn inverse_matrix(geom: &RobotGeometry) -> Matrix4x3<f64> {
    let c = 1.0 / geom.roller_angle.tan();
    let k = geom.yaw_lever();
    let r = geom.wheel_radius;
    Matrix4x3::new(
        1.0, -c, k, //
        1.0, c, -k, //
        1.0, -c, -k, //
        1.0, c, k,
    ) / r
}

/// Forward map in its uncorrected form: leading `-R/4`, lateral row first,
/// all-ones row second.
pub fn uncorrected_forward_matrix(geom: &RobotGeometry) -> Matrix3x4<f64> {
    let t = geom.roller_angle.tan();
    let l = 1.0 / geom.yaw_lever();
    Matrix3x4::new(
        -t, t, -t, t, //
        1.0, 1.0, 1.0, 1.0, //
        l, -l, -l, l,
    ) * (-geom.wheel_radius / 4.0)
}

/// Inverse map in its uncorrected form: no `1/R` factor.
pub fn uncorrected_inverse_matrix(geom: &RobotGeometry) -> Matrix4x3<f64> {
    let c = 1.0 / geom.roller_angle.tan();
    let k = geom.yaw_lever();
    Matrix4x3::new(
        -c, 1.0, k, //
        c, 1.0, -k, //
        -c, 1.0, -k, //
        c, 1.0, k,
    )
}

pub fn forward_kinematics(wheels: &WheelSpeeds, geom: &RobotGeometry) -> Result<BodyVelocity> {
    geom.validate()?;
    if !wheels.is_finite() {
        return Err(Error::InvalidInput(format!(
            "wheel speeds must be finite, got {:?}",
            wheels.w
        )));
    }
    let v = forward_matrix(geom) * wheels.as_vector();
    Ok(BodyVelocity::new(v[0], v[1], v[2]))
}

pub fn inverse_kinematics(v: &BodyVelocity, geom: &RobotGeometry) -> Result<WheelSpeeds> {
    geom.validate()?;
    if !v.is_finite() {
        return Err(Error::InvalidInput(format!(
            "body velocity must be finite, got {v:?}"
        )));
    }
    let w = inverse_matrix(geom) * v.as_vector();
    Ok(WheelSpeeds { w: [w[0], w[1], w[2], w[3]] })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    /// `forward * inverse` for the normalized maps.
    pub composition: Matrix3<f64>,
    /// Max entrywise `|forward * inverse - I|`.
    pub residual: f64,
    pub passed: bool,
    /// Composition of the uncorrected maps.
    pub uncorrected_composition: Matrix3<f64>,
    /// Max entrywise `|uncorrected composition + R * I|`.
    pub uncorrected_residual_vs_neg_r: f64,
}

impl ConsistencyReport {
    /// True when the uncorrected maps compose to `-R * I` at the given tolerance.
    pub fn uncorrected_is_neg_r_identity(&self, tol: f64) -> bool {
        self.uncorrected_residual_vs_neg_r < tol
    }
}

pub fn kinematic_consistency_report(geom: &RobotGeometry) -> Result<ConsistencyReport> {
    geom.validate()?;
    let composition = forward_matrix(geom) * inverse_matrix(geom);
    let residual = (composition - Matrix3::identity()).amax();
    let uncorrected = uncorrected_forward_matrix(geom) * uncorrected_inverse_matrix(geom);
    let neg_r = Matrix3::identity() * -geom.wheel_radius;
    Ok(ConsistencyReport {
        composition,
        residual,
        passed: residual < CONSISTENCY_TOLERANCE,
        uncorrected_composition: uncorrected,
        uncorrected_residual_vs_neg_r: (uncorrected - neg_r).amax(),
    })
}
