use std::net::SocketAddr;

use crate::broker::{ProtocolError, RouteError};
use crate::envelope::CodecError;
use crate::session::SessionError;

#[derive(Debug, thiserror::Error)]
pub enum BridgeError {
    #[error("cannot listen on {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error("websocket: {0}")]
    WebSocket(#[from] tokio_tungstenite::tungstenite::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<RouteError> for BridgeError {
    fn from(e: RouteError) -> Self {
        match e {
            RouteError::Codec(c) => c.into(),
            RouteError::Protocol(p) => p.into(),
        }
    }
}
