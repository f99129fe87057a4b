//! TOML scenario files.
//!
//! ```toml
//! schema_version = 1
//!
//! [world]
//! bounds = { min_x = 0.0, min_y = 0.0, max_x = 12.0, max_y = 8.0 }
//! start_pose = { x = 1.0, y = 1.25, theta_rad = 0.0 }
//! goal_region = { min_x = 0.5, min_y = 5.5, max_x = 2.0, max_y = 7.0 }
//! operator_offset_m = 0.5
//! obstacles = [{ min_x = 0.0, min_y = 2.5, max_x = 9.0, max_y = 3.1 }]
//!
//! [geometry]      # optional, defaults shown by `RobotGeometry::default`
//! [intent]        # optional
//! [admittance]    # optional
//! [sim]           # optional
//! ```
//!
//! Unknown keys are rejected so that typos surface as errors.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::admittance::AdmittanceParams;
use crate::error::{Error, Result};
use crate::intent::{ForceMode, IntentConfig, IntentLayout, DEFAULT_HOLD_TIMEOUT};
use crate::kinematics::RobotGeometry;
use crate::sim::{Pose, Rect, SimConfig, WorldModel, DEFAULT_DT, DEFAULT_JOYSTICK_W_MAX};

pub const SCENARIO_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub world: WorldSection,
    #[serde(default)]
    pub geometry: GeometrySection,
    #[serde(default)]
    pub intent: IntentSection,
    #[serde(default)]
    pub admittance: AdmittanceSection,
    #[serde(default)]
    pub sim: SimSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartPose {
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub theta_rad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldSection {
    pub bounds: Rect,
    #[serde(default)]
    pub obstacles: Vec<Rect>,
    pub start_pose: StartPose,
    pub goal_region: Rect,
    #[serde(default = "default_operator_offset")]
    pub operator_offset_m: f64,
}

fn default_operator_offset() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometrySection {
    pub wheel_radius_m: f64,
    /// Degrees in the file, radians in [`RobotGeometry`].
    pub roller_angle_deg: f64,
    pub d1_m: f64,
    pub d2_m: f64,
    pub footprint_length_m: f64,
    pub footprint_width_m: f64,
}

impl Default for GeometrySection {
    fn default() -> Self {
        let g = RobotGeometry::default();
        Self {
            wheel_radius_m: g.wheel_radius,
            roller_angle_deg: g.roller_angle.to_degrees(),
            d1_m: g.d1,
            d2_m: g.d2,
            footprint_length_m: g.footprint_length,
            footprint_width_m: g.footprint_width,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntentSection {
    pub stiffness_n_per_m: f64,
    pub deadzone_length_m: f64,
    pub deadzone_width_m: f64,
    pub region_extent_m: f64,
    pub force_mode: ForceMode,
    pub gaze_hold_timeout_s: f64,
}

impl Default for IntentSection {
    fn default() -> Self {
        let l = IntentLayout::default();
        Self {
            stiffness_n_per_m: AdmittanceParams::default().stiffness,
            deadzone_length_m: l.deadzone_length,
            deadzone_width_m: l.deadzone_width,
            region_extent_m: l.region_extent,
            force_mode: ForceMode::default(),
            gaze_hold_timeout_s: DEFAULT_HOLD_TIMEOUT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdmittanceSection {
    pub virtual_mass_kg: f64,
    pub damping_ns_per_m: f64,
    pub v_max_mps: f64,
}

impl Default for AdmittanceSection {
    fn default() -> Self {
        let p = AdmittanceParams::default();
        Self {
            virtual_mass_kg: p.virtual_mass,
            damping_ns_per_m: p.damping,
            v_max_mps: p.v_max,
        }
    }
}

/// Which script kinds a scenario accepts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputModeSetting {
    /// Decided by the script contents.
    #[default]
    Auto,
    Gaze,
    Joystick,
    Live,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    pub dt_s: f64,
    pub t_limit_s: f64,
    pub input_mode: InputModeSetting,
    pub pose_lag_s: f64,
    pub joystick_w_max_radps: f64,
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            dt_s: DEFAULT_DT,
            t_limit_s: 120.0,
            input_mode: InputModeSetting::Auto,
            pose_lag_s: 0.0,
            joystick_w_max_radps: DEFAULT_JOYSTICK_W_MAX,
        }
    }
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let scenario: Scenario = toml::from_str(text).map_err(|e| Error::Scenario(e.to_string()))?;
        if scenario.schema_version != SCENARIO_SCHEMA_VERSION {
            return Err(Error::Scenario(format!(
                "schema_version: unsupported version {} (expected {SCENARIO_SCHEMA_VERSION})",
                scenario.schema_version
            )));
        }
        scenario.to_sim_config()?;
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Scenario(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Scenario(msg) => Error::Scenario(format!("{}: {msg}", path.display())),
            other => Error::Scenario(format!("{}: {other}", path.display())),
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn to_sim_config(&self) -> Result<SimConfig> {
        let g = &self.geometry;
        let geometry = RobotGeometry {
            wheel_radius: g.wheel_radius_m,
            roller_angle: g.roller_angle_deg.to_radians(),
            d1: g.d1_m,
            d2: g.d2_m,
            footprint_length: g.footprint_length_m,
            footprint_width: g.footprint_width_m,
        };
        let i = &self.intent;
        let intent = IntentConfig {
            layout: IntentLayout {
                deadzone_length: i.deadzone_length_m,
                deadzone_width: i.deadzone_width_m,
                region_extent: i.region_extent_m,
            },
            force_mode: i.force_mode,
            hold_timeout: i.gaze_hold_timeout_s,
        };
        let a = &self.admittance;
        let params = AdmittanceParams {
            stiffness: i.stiffness_n_per_m,
            virtual_mass: a.virtual_mass_kg,
            damping: a.damping_ns_per_m,
            v_max: a.v_max_mps,
        };
        let w = &self.world;
        let world = WorldModel {
            bounds: w.bounds,
            obstacles: w.obstacles.clone(),
            start_pose: Pose::new(w.start_pose.x, w.start_pose.y, w.start_pose.theta_rad),
            goal_region: w.goal_region,
            operator_offset: w.operator_offset_m,
        };
        let cfg = SimConfig {
            world,
            geometry,
            params,
            intent,
            dt: self.sim.dt_s,
            t_limit: self.sim.t_limit_s,
            joystick_w_max: self.sim.joystick_w_max_radps,
            pose_lag: self.sim.pose_lag_s,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
