//! Typed payloads for the built-in schemas. Field order matches the schema
//! tables, which fixes the canonical JSON layout.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::envelope::CodecError;
use crate::schema::{self, TopicSchema};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GazeMsg {
    pub x: f64,
    pub y: f64,
    pub valid: bool,
    pub stamp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JoyMsg {
    pub axis_x: f64,
    pub axis_y: f64,
    pub axis_yaw: f64,
    pub stamp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseMsg {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub stamp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwistMsg {
    pub vx: f64,
    pub vy: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WheelCmdMsg {
    pub w: [f64; 4],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlParamsMsg {
    pub damping_ns_per_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForceMsg {
    pub fx: f64,
    pub fy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Message {
    Gaze(GazeMsg),
    Joy(JoyMsg),
    Pose(PoseMsg),
    Twist(TwistMsg),
    WheelCmd(WheelCmdMsg),
    ControlParams(ControlParamsMsg),
    Force(ForceMsg),
}

impl Message {
    pub fn schema(&self) -> &'static TopicSchema {
        match self {
            Message::Gaze(_) => &schema::GAZE,
            Message::Joy(_) => &schema::JOY,
            Message::Pose(_) => &schema::POSE,
            Message::Twist(_) => &schema::TWIST,
            Message::WheelCmd(_) => &schema::WHEEL_CMD,
            Message::ControlParams(_) => &schema::CONTROL_PARAMS,
            Message::Force(_) => &schema::FORCE,
        }
    }

    pub fn type_name(&self) -> &'static str {
        self.schema().name
    }

    pub fn is_finite(&self) -> bool {
        let vals: &[f64] = match self {
            Message::Gaze(m) => &[m.x, m.y, m.stamp],
            Message::Joy(m) => &[m.axis_x, m.axis_y, m.axis_yaw, m.stamp],
            Message::Pose(m) => &[m.x, m.y, m.theta, m.stamp],
            Message::Twist(m) => &[m.vx, m.vy, m.omega],
            Message::WheelCmd(m) => &m.w,
            Message::ControlParams(m) => &[m.damping_ns_per_m],
            Message::Force(m) => &[m.fx, m.fy],
        };
        vals.iter().all(|v| v.is_finite())
    }

    /// Validate a raw JSON object against the schema named `type_name` and
    /// build the typed message.
    pub fn from_json(type_name: &str, raw: &Map<String, Value>, strict: bool) -> Result<Self, CodecError> {
        let schema = schema::schema(type_name)
            .ok_or_else(|| CodecError::UnknownType(type_name.to_string()))?;
        let clean = Value::Object(schema.validate(raw, strict)?);
        let conv = |e: serde_json::Error| CodecError::Invalid(format!("msg: {e}"));
        Ok(match type_name {
            n if n == schema::GAZE.name => Message::Gaze(serde_json::from_value(clean).map_err(conv)?),
            n if n == schema::JOY.name => Message::Joy(serde_json::from_value(clean).map_err(conv)?),
            n if n == schema::POSE.name => Message::Pose(serde_json::from_value(clean).map_err(conv)?),
            n if n == schema::TWIST.name => Message::Twist(serde_json::from_value(clean).map_err(conv)?),
            n if n == schema::WHEEL_CMD.name => {
                Message::WheelCmd(serde_json::from_value(clean).map_err(conv)?)
            }
            n if n == schema::CONTROL_PARAMS.name => {
                Message::ControlParams(serde_json::from_value(clean).map_err(conv)?)
            }
            _ => Message::Force(serde_json::from_value(clean).map_err(conv)?),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples() -> Vec<Message> {
        vec![
            Message::Gaze(GazeMsg { x: 1.0, y: 2.0, valid: true, stamp: 0.5 }),
            Message::Joy(JoyMsg { axis_x: 1.0, axis_y: 0.0, axis_yaw: -1.0, stamp: 0.0 }),
            Message::Pose(PoseMsg { x: 1.0, y: 2.0, theta: 0.1, stamp: 3.0 }),
            Message::Twist(TwistMsg { vx: 0.5, vy: 0.0, omega: 0.0 }),
            Message::WheelCmd(WheelCmdMsg { w: [1.0, 2.0, 3.0, 4.0] }),
            Message::ControlParams(ControlParamsMsg { damping_ns_per_m: 20.0 }),
            Message::Force(ForceMsg { fx: 10.0, fy: 0.0 }),
        ]
    }

    #[test]
    fn struct_layout_matches_schema_table() {
        for m in samples() {
            let v = serde_json::to_value(m).unwrap();
            let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
            let mut expected: Vec<&str> = m.schema().fields.iter().map(|f| f.name).collect();
            let mut keys_sorted = keys.clone();
            keys_sorted.sort();
            expected.sort();
            assert_eq!(keys_sorted, expected, "{}", m.type_name());
        }
    }

    #[test]
    fn from_json_roundtrip() {
        for m in samples() {
            let v = serde_json::to_value(m).unwrap();
            let back = Message::from_json(m.type_name(), v.as_object().unwrap(), true).unwrap();
            assert_eq!(back, m);
        }
    }

    #[test]
    fn unknown_type() {
        let e = Message::from_json("std_msgs/String", &Map::new(), true).unwrap_err();
        assert_eq!(e, CodecError::UnknownType("std_msgs/String".into()));
    }
}
