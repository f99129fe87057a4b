//! Message schemas and the built-in topic table.

use serde_json::{Map, Value};

use crate::envelope::CodecError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldType {
    Float,
    Bool,
    FloatArray(usize),
}

impl FieldType {
    fn describe(&self) -> String {
        match self {
            FieldType::Float => "finite number".into(),
            FieldType::Bool => "boolean".into(),
            FieldType::FloatArray(n) => format!("array of {n} finite numbers"),
        }
    }

    fn accepts(&self, v: &Value) -> bool {
        match self {
            FieldType::Float => v.as_f64().is_some_and(f64::is_finite),
            FieldType::Bool => v.is_boolean(),
            FieldType::FloatArray(n) => v.as_array().is_some_and(|a| {
                a.len() == *n && a.iter().all(|x| x.as_f64().is_some_and(f64::is_finite))
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FieldSpec {
    pub name: &'static str,
    pub ty: FieldType,
    pub unit: &'static str,
}

const fn field(name: &'static str, ty: FieldType, unit: &'static str) -> FieldSpec {
    FieldSpec { name, ty, unit }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TopicSchema {
    pub name: &'static str,
    pub fields: &'static [FieldSpec],
}

use FieldType::{Bool, Float, FloatArray};

pub const GAZE: TopicSchema = TopicSchema {
    name: "gaze_drive/Gaze",
    fields: &[
        field("x", Float, "m"),
        field("y", Float, "m"),
        field("valid", Bool, ""),
        field("stamp", Float, "s"),
    ],
};

pub const JOY: TopicSchema = TopicSchema {
    name: "gaze_drive/Joy",
    fields: &[
        field("axis_x", Float, ""),
        field("axis_y", Float, ""),
        field("axis_yaw", Float, ""),
        field("stamp", Float, "s"),
    ],
};

pub const POSE: TopicSchema = TopicSchema {
    name: "gaze_drive/Pose2D",
    fields: &[
        field("x", Float, "m"),
        field("y", Float, "m"),
        field("theta", Float, "rad"),
        field("stamp", Float, "s"),
    ],
};

pub const TWIST: TopicSchema = TopicSchema {
    name: "gaze_drive/Twist2D",
    fields: &[
        field("vx", Float, "m/s"),
        field("vy", Float, "m/s"),
        field("omega", Float, "rad/s"),
    ],
};

pub const WHEEL_CMD: TopicSchema = TopicSchema {
    name: "gaze_drive/WheelCmd",
    fields: &[field("w", FloatArray(4), "rad/s")],
};

pub const CONTROL_PARAMS: TopicSchema = TopicSchema {
    name: "gaze_drive/ControlParams",
    fields: &[field("damping_ns_per_m", Float, "N*s/m")],
};

pub const FORCE: TopicSchema = TopicSchema {
    name: "gaze_drive/Force2D",
    fields: &[field("fx", Float, "N"), field("fy", Float, "N")],
};

pub const SCHEMAS: &[TopicSchema] = &[GAZE, JOY, POSE, TWIST, WHEEL_CMD, CONTROL_PARAMS, FORCE];

pub mod topics {
    pub const GAZE: &str = "/gaze";
    pub const JOY: &str = "/joy";
    pub const VIRTUAL_ROBOT_POSE: &str = "/virtual_robot/pose";
    pub const ROBOT_POSE: &str = "/robot/pose";
    pub const CMD_VEL: &str = "/cmd_vel";
    pub const WHEEL_CMD: &str = "/wheel_cmd";
    pub const CONTROL_PARAMS: &str = "/control/params";
    pub const TELEMETRY_FORCE: &str = "/telemetry/force";
}

/// Built-in topics and the schema each one carries.
pub const BUILTIN_TOPICS: &[(&str, &TopicSchema)] = &[
    (topics::GAZE, &GAZE),
    (topics::JOY, &JOY),
    (topics::VIRTUAL_ROBOT_POSE, &POSE),
    (topics::ROBOT_POSE, &POSE),
    (topics::CMD_VEL, &TWIST),
    (topics::WHEEL_CMD, &WHEEL_CMD),
    (topics::CONTROL_PARAMS, &CONTROL_PARAMS),
    (topics::TELEMETRY_FORCE, &FORCE),
];

pub fn schema(name: &str) -> Option<&'static TopicSchema> {
    SCHEMAS.iter().find(|s| s.name == name)
}

pub fn builtin_topic_schema(topic: &str) -> Option<&'static TopicSchema> {
    BUILTIN_TOPICS
        .iter()
        .find(|(t, _)| *t == topic)
        .map(|(_, s)| *s)
}

impl TopicSchema {
    /// Check `msg` against this schema. In strict mode unknown keys are an
    /// error; otherwise they are dropped from the returned map.
    pub fn validate(&self, msg: &Map<String, Value>, strict: bool) -> Result<Map<String, Value>, CodecError> {
        let mut out = Map::new();
        for key in msg.keys() {
            if !self.fields.iter().any(|f| f.name == key) && strict {
                return Err(CodecError::UnknownField {
                    field: format!("msg.{key}"),
                    context: self.name.to_string(),
                });
            }
        }
        for f in self.fields {
            match msg.get(f.name) {
                Some(v) if f.ty.accepts(v) => {
                    out.insert(f.name.to_string(), v.clone());
                }
                Some(_) | None => {
                    return Err(CodecError::Validation {
                        field: format!("msg.{}", f.name),
                        expected: f.ty.describe(),
                    })
                }
            }
        }
        Ok(out)
    }
}
