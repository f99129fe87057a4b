//! Line-oriented input scripts.
//!
//! ```text
//! schema_version,1
//! # t, kind, payload...
//! 0.0, waypoint, 10.5, 1.25, 1.0, 0.8   # x, y, lead, [arrive radius]
//! 0.0, gaze, 1.2, 0.3, 1                # x, y, valid
//! 0.0, joy, 1, 0, 0                     # axis_x, axis_y, axis_yaw
//! 20.0, damping, 10                     # N*s/m
//! ```
//!
//! Timestamps are seconds from episode start and must be non-decreasing.

use std::fmt::Write as _;
use std::io::Read;

use serde::{Deserialize, Serialize};

use super::joystick::JoystickInput;
use crate::error::{Error, Result};
use crate::intent::GazeSample;

pub const SCRIPT_SCHEMA_VERSION: u32 = 1;

/// Default arrival radius for waypoint records that omit it.
pub const DEFAULT_ARRIVE_RADIUS: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub x: f64,
    pub y: f64,
    /// Distance from the robot center to the synthesized gaze point.
    pub lead: f64,
    /// The chaser moves on to the next waypoint inside this radius.
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InputKind {
    Gaze(GazeSample),
    Joy(JoystickInput),
    Damping(f64),
    Waypoint(Waypoint),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputEvent {
    pub t: f64,
    pub kind: InputKind,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InputScript {
    pub events: Vec<InputEvent>,
}

impl InputScript {
    pub fn new(events: Vec<InputEvent>) -> Result<Self> {
        let mut prev = 0.0;
        for (i, e) in events.iter().enumerate() {
            if !(e.t.is_finite() && e.t >= prev) {
                return Err(Error::Script {
                    line: i as u64 + 1,
                    message: format!("timestamp {} is not finite and non-decreasing", e.t),
                });
            }
            prev = e.t;
        }
        Ok(Self { events })
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn has_gaze(&self) -> bool {
        self.events
            .iter()
            .any(|e| matches!(e.kind, InputKind::Gaze(_) | InputKind::Waypoint(_)))
    }

    pub fn has_joystick(&self) -> bool {
        self.events.iter().any(|e| matches!(e.kind, InputKind::Joy(_)))
    }

    pub fn parse_str(text: &str) -> Result<Self> {
        Self::parse(text.as_bytes())
    }

    pub fn parse<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);

        let mut version_seen = false;
        let mut events = Vec::new();
        let mut prev_t = 0.0;
        for record in rdr.records() {
            let record = record.map_err(|e| Error::Script {
                line: e.position().map(|p| p.line()).unwrap_or(0),
                message: e.to_string(),
            })?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            let err = |message: String| Error::Script { line, message };
            // strip trailing comments and blank fields
            let fields: Vec<&str> = record
                .iter()
                .map(|f| f.split('#').next().unwrap_or("").trim())
                .collect();
            let fields = trim_trailing_empty(&fields);
            if fields.is_empty() {
                continue;
            }
            if !version_seen {
                if fields.len() != 2 || fields[0] != "schema_version" {
                    return Err(err("first record must be `schema_version,1`".into()));
                }
                let v: u32 = fields[1]
                    .parse()
                    .map_err(|_| err(format!("bad schema_version `{}`", fields[1])))?;
                if v != SCRIPT_SCHEMA_VERSION {
                    return Err(err(format!(
                        "unsupported schema_version {v} (expected {SCRIPT_SCHEMA_VERSION})"
                    )));
                }
                version_seen = true;
                continue;
            }
            if fields.len() < 2 {
                return Err(err("expected `t, kind, payload...`".into()));
            }
            let t = number(fields[0], "t").map_err(err)?;
            if t < 0.0 || t < prev_t {
                return Err(err(format!("timestamp {t} goes backwards or is negative")));
            }
            prev_t = t;
            let payload = &fields[2..];
            let kind = match fields[1] {
                "gaze" => {
                    expect_len(payload, 3, 3, "gaze").map_err(err)?;
                    let x = number(payload[0], "x").map_err(err)?;
                    let y = number(payload[1], "y").map_err(err)?;
                    let valid = boolean(payload[2]).map_err(err)?;
                    InputKind::Gaze(GazeSample {
                        timestamp: t,
                        x,
                        y,
                        valid,
                    })
                }
                "joy" => {
                    expect_len(payload, 3, 3, "joy").map_err(err)?;
                    let ax = number(payload[0], "axis_x").map_err(err)?;
                    let ay = number(payload[1], "axis_y").map_err(err)?;
                    let ayaw = number(payload[2], "axis_yaw").map_err(err)?;
                    for (name, v) in [("axis_x", ax), ("axis_y", ay), ("axis_yaw", ayaw)] {
                        if !(-1.0..=1.0).contains(&v) {
                            return Err(err(format!("{name} = {v} outside [-1, 1]")));
                        }
                    }
                    InputKind::Joy(JoystickInput::new(ax, ay, ayaw))
                }
                "damping" => {
                    expect_len(payload, 1, 1, "damping").map_err(err)?;
                    let d = number(payload[0], "damping").map_err(err)?;
                    if d <= 0.0 {
                        return Err(err(format!("damping must be > 0, got {d}")));
                    }
                    InputKind::Damping(d)
                }
                "waypoint" => {
                    expect_len(payload, 3, 4, "waypoint").map_err(err)?;
                    let x = number(payload[0], "x").map_err(err)?;
                    let y = number(payload[1], "y").map_err(err)?;
                    let lead = number(payload[2], "lead").map_err(err)?;
                    let radius = match payload.get(3) {
                        Some(r) => number(r, "radius").map_err(err)?,
                        None => DEFAULT_ARRIVE_RADIUS,
                    };
                    if lead <= 0.0 || radius <= 0.0 {
                        return Err(err("waypoint lead and radius must be > 0".into()));
                    }
                    InputKind::Waypoint(Waypoint { x, y, lead, radius })
                }
                other => return Err(err(format!("unknown record kind `{other}`"))),
            };
            events.push(InputEvent { t, kind });
        }
        if !version_seen {
            return Err(Error::Script {
                line: 0,
                message: "missing `schema_version,1` header".into(),
            });
        }
        Ok(Self { events })
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("schema_version,{SCRIPT_SCHEMA_VERSION}\n");
        for e in &self.events {
            let _ = match e.kind {
                InputKind::Gaze(g) => writeln!(
                    out,
                    "{},gaze,{},{},{}",
                    e.t,
                    g.x,
                    g.y,
                    u8::from(g.valid)
                ),
                InputKind::Joy(j) => {
                    writeln!(out, "{},joy,{},{},{}", e.t, j.axis_x, j.axis_y, j.axis_yaw)
                }
                InputKind::Damping(d) => writeln!(out, "{},damping,{}", e.t, d),
                InputKind::Waypoint(w) => writeln!(
                    out,
                    "{},waypoint,{},{},{},{}",
                    e.t, w.x, w.y, w.lead, w.radius
                ),
            };
        }
        out
    }
}

fn trim_trailing_empty<'a>(fields: &'a [&'a str]) -> &'a [&'a str] {
    let mut end = fields.len();
    while end > 0 && fields[end - 1].is_empty() {
        end -= 1;
    }
    &fields[..end]
}

fn expect_len(payload: &[&str], min: usize, max: usize, kind: &str) -> Result<(), String> {
    if payload.len() < min || payload.len() > max {
        let want = if min == max {
            min.to_string()
        } else {
            format!("{min}-{max}")
        };
        return Err(format!(
            "`{kind}` expects {want} payload fields, got {}",
            payload.len()
        ));
    }
    Ok(())
}

fn number(s: &str, name: &str) -> Result<f64, String> {
    let v: f64 = s
        .parse()
        .map_err(|_| format!("field `{name}`: `{s}` is not a number"))?;
    if !v.is_finite() {
        return Err(format!("field `{name}` must be finite"));
    }
    Ok(v)
}

fn boolean(s: &str) -> Result<bool, String> {
    match s {
        "1" | "true" => Ok(true),
        "0" | "false" => Ok(false),
        _ => Err(format!("field `valid`: `{s}` is not a boolean (0/1/true/false)")),
    }
}
