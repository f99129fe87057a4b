//! JSON pub/sub over WebSocket in the rosbridge style, with session
//! recording and replay.

pub mod broker;
pub mod client;
pub mod envelope;
pub mod error;
pub mod message;
pub mod schema;
pub mod server;
pub mod session;

pub use broker::{Broker, BrokerStats, PeerId, PeerKind, PeerQueue, ProtocolError, RouteError, Routed};
pub use client::BridgeClient;
pub use envelope::{decode, encode, Codec, CodecError, Envelope, Op};
pub use error::BridgeError;
pub use message::{ControlParamsMsg, ForceMsg, GazeMsg, JoyMsg, Message, PoseMsg, TwistMsg, WheelCmdMsg};
pub use schema::{topics, TopicSchema};
pub use server::{apply_event, run_broker, BridgeListener, PeerEvent, BRIDGE_PATH, DEFAULT_PORT};
pub use session::{Direction, Replay, SessionError, SessionEvent, SessionReader, SessionRecorder};
