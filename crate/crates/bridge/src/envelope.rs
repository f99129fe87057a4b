//! Wire envelopes and the JSON text codec.
//!
//! A frame is one JSON object with keys in canonical order
//! `op, topic, type, msg, stamp`. `type` is omitted for subscribe and
//! unsubscribe when absent; `msg` appears only on publish.

use std::fmt;

use serde::de::Error as _;
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use crate::message::Message;
use crate::schema;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CodecError {
    #[error("malformed JSON: {0}")]
    Parse(String),
    #[error("unknown field `{field}` in {context}")]
    UnknownField { field: String, context: String },
    #[error("field `{field}`: expected {expected}")]
    Validation { field: String, expected: String },
    #[error("unknown message type `{0}`")]
    UnknownType(String),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Op {
    Advertise,
    Unadvertise,
    Subscribe,
    Unsubscribe,
    Publish,
}

impl Op {
    pub const ALL: [Op; 5] = [Op::Advertise, Op::Unadvertise, Op::Subscribe, Op::Unsubscribe, Op::Publish];

    pub fn as_str(self) -> &'static str {
        match self {
            Op::Advertise => "advertise",
            Op::Unadvertise => "unadvertise",
            Op::Subscribe => "subscribe",
            Op::Unsubscribe => "unsubscribe",
            Op::Publish => "publish",
        }
    }

    pub fn parse(s: &str) -> Option<Op> {
        Op::ALL.into_iter().find(|op| op.as_str() == s)
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub op: Op,
    pub topic: String,
    pub msg_type: Option<String>,
    pub msg: Option<Message>,
    /// Sender clock, seconds.
    pub stamp: f64,
}

impl Envelope {
    pub fn advertise(topic: impl Into<String>, msg_type: impl Into<String>, stamp: f64) -> Self {
        Self {
            op: Op::Advertise,
            topic: topic.into(),
            msg_type: Some(msg_type.into()),
            msg: None,
            stamp,
        }
    }

    pub fn unadvertise(topic: impl Into<String>, stamp: f64) -> Self {
        Self {
            op: Op::Unadvertise,
            topic: topic.into(),
            msg_type: None,
            msg: None,
            stamp,
        }
    }

    pub fn subscribe(topic: impl Into<String>, stamp: f64) -> Self {
        Self {
            op: Op::Subscribe,
            topic: topic.into(),
            msg_type: None,
            msg: None,
            stamp,
        }
    }

    pub fn unsubscribe(topic: impl Into<String>, stamp: f64) -> Self {
        Self {
            op: Op::Unsubscribe,
            topic: topic.into(),
            msg_type: None,
            msg: None,
            stamp,
        }
    }

    pub fn publish(topic: impl Into<String>, msg: Message, stamp: f64) -> Self {
        Self {
            op: Op::Publish,
            topic: topic.into(),
            msg_type: Some(msg.type_name().to_string()),
            msg: Some(msg),
            stamp,
        }
    }

    pub fn validate(&self) -> Result<(), CodecError> {
        if self.topic.is_empty() || !self.topic.starts_with('/') {
            return Err(topic_error());
        }
        if !self.stamp.is_finite() {
            return Err(CodecError::Validation {
                field: "stamp".into(),
                expected: "finite number".into(),
            });
        }
        if let Some(t) = &self.msg_type {
            if schema::schema(t).is_none() {
                return Err(CodecError::UnknownType(t.clone()));
            }
        }
        match self.op {
            Op::Advertise | Op::Publish if self.msg_type.is_none() => Err(CodecError::Validation {
                field: "type".into(),
                expected: "message type name".into(),
            }),
            Op::Publish => {
                let msg = self.msg.as_ref().ok_or_else(|| CodecError::Validation {
                    field: "msg".into(),
                    expected: "object".into(),
                })?;
                if Some(msg.type_name()) != self.msg_type.as_deref() {
                    return Err(CodecError::Invalid(format!(
                        "type `{}` does not match payload type `{}`",
                        self.msg_type.as_deref().unwrap_or_default(),
                        msg.type_name()
                    )));
                }
                if !msg.is_finite() {
                    return Err(CodecError::Validation {
                        field: "msg".into(),
                        expected: "finite numbers".into(),
                    });
                }
                Ok(())
            }
            _ if self.msg.is_some() => Err(CodecError::Invalid(format!("`msg` is only allowed on publish, not {}", self.op))),
            _ => Ok(()),
        }
    }
}

fn topic_error() -> CodecError {
    CodecError::Validation {
        field: "topic".into(),
        expected: "non-empty string beginning with '/'".into(),
    }
}

impl Serialize for Envelope {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let len = 3 + usize::from(self.msg_type.is_some()) + usize::from(self.msg.is_some());
        let mut map = s.serialize_map(Some(len))?;
        map.serialize_entry("op", self.op.as_str())?;
        map.serialize_entry("topic", &self.topic)?;
        if let Some(t) = &self.msg_type {
            map.serialize_entry("type", t)?;
        }
        if let Some(m) = &self.msg {
            map.serialize_entry("msg", m)?;
        }
        map.serialize_entry("stamp", &self.stamp)?;
        map.end()
    }
}

/// Deserialization is always strict.
impl<'de> Deserialize<'de> for Envelope {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        Codec::strict().decode_value(&v).map_err(D::Error::custom)
    }
}

const ENVELOPE_KEYS: [&str; 5] = ["op", "topic", "type", "msg", "stamp"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Codec {
    /// Reject unknown keys instead of ignoring them.
    pub strict: bool,
}

impl Default for Codec {
    fn default() -> Self {
        Self::strict()
    }
}

impl Codec {
    pub const fn strict() -> Self {
        Self { strict: true }
    }

    pub const fn lenient() -> Self {
        Self { strict: false }
    }

    pub fn encode(&self, e: &Envelope) -> Result<String, CodecError> {
        e.validate()?;
        serde_json::to_string(e).map_err(|err| CodecError::Invalid(err.to_string()))
    }

    pub fn decode(&self, text: &str) -> Result<Envelope, CodecError> {
        let v: Value = serde_json::from_str(text).map_err(|e| CodecError::Parse(e.to_string()))?;
        self.decode_value(&v)
    }

    pub fn decode_bytes(&self, bytes: &[u8]) -> Result<Envelope, CodecError> {
        let text = std::str::from_utf8(bytes).map_err(|e| CodecError::Parse(format!("invalid UTF-8: {e}")))?;
        self.decode(text)
    }

    pub fn decode_value(&self, v: &Value) -> Result<Envelope, CodecError> {
        let obj = v
            .as_object()
            .ok_or_else(|| CodecError::Invalid("frame must be a JSON object".into()))?;
        if self.strict {
            if let Some(k) = obj.keys().find(|k| !ENVELOPE_KEYS.contains(&k.as_str())) {
                return Err(CodecError::UnknownField {
                    field: k.clone(),
                    context: "envelope".into(),
                });
            }
        }
        let op_str = obj.get("op").and_then(Value::as_str);
        let op = op_str.and_then(Op::parse).ok_or_else(|| CodecError::Validation {
            field: "op".into(),
            expected: "one of advertise, unadvertise, subscribe, unsubscribe, publish".into(),
        })?;
        let topic = obj
            .get("topic")
            .and_then(Value::as_str)
            .filter(|t| t.starts_with('/'))
            .ok_or_else(topic_error)?
            .to_string();
        let msg_type = match obj.get("type") {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) => Some(s.clone()),
            Some(_) => {
                return Err(CodecError::Validation {
                    field: "type".into(),
                    expected: "string".into(),
                })
            }
        };
        let stamp = obj
            .get("stamp")
            .and_then(Value::as_f64)
            .filter(|s| s.is_finite())
            .ok_or_else(|| CodecError::Validation {
                field: "stamp".into(),
                expected: "finite number".into(),
            })?;
        let msg = match (op, obj.get("msg")) {
            (Op::Publish, Some(Value::Object(raw))) => {
                let t = msg_type.as_deref().ok_or_else(|| CodecError::Validation {
                    field: "type".into(),
                    expected: "message type name".into(),
                })?;
                Some(Message::from_json(t, raw, self.strict)?)
            }
            (Op::Publish, _) => {
                return Err(CodecError::Validation {
                    field: "msg".into(),
                    expected: "object".into(),
                })
            }
            (_, None) => None,
            (_, Some(_)) if self.strict => {
                return Err(CodecError::Invalid(format!("`msg` is only allowed on publish, not {op}")))
            }
            (_, Some(_)) => None,
        };
        let e = Envelope {
            op,
            topic,
            msg_type,
            msg,
            stamp,
        };
        e.validate()?;
        Ok(e)
    }
}

pub fn encode(e: &Envelope) -> Result<String, CodecError> {
    Codec::strict().encode(e)
}

pub fn decode(text: &str) -> Result<Envelope, CodecError> {
    Codec::strict().decode(text)
}
