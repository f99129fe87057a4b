//! Minimal WebSocket client speaking the envelope protocol.

use futures_util::{SinkExt, StreamExt};
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message as WsMessage;
use tokio_tungstenite::{MaybeTlsStream, WebSocketStream};

use crate::envelope::{Codec, Envelope};
use crate::error::BridgeError;

pub struct BridgeClient {
    ws: WebSocketStream<MaybeTlsStream<TcpStream>>,
    codec: Codec,
}

impl BridgeClient {
    pub async fn connect(url: &str) -> Result<Self, BridgeError> {
        let (ws, _) = tokio_tungstenite::connect_async(url).await?;
        Ok(Self {
            ws,
            codec: Codec::strict(),
        })
    }

    pub async fn send(&mut self, e: &Envelope) -> Result<(), BridgeError> {
        let text = self.codec.encode(e)?;
        self.send_text(&text).await
    }

    /// Send a raw frame without validation.
    pub async fn send_text(&mut self, text: &str) -> Result<(), BridgeError> {
        self.ws.send(WsMessage::text(text)).await?;
        Ok(())
    }

    /// Next decoded envelope; `None` once the server closes.
    pub async fn recv(&mut self) -> Option<Result<Envelope, BridgeError>> {
        loop {
            match self.ws.next().await? {
                Ok(WsMessage::Text(t)) => return Some(self.codec.decode(t.as_str()).map_err(Into::into)),
                Ok(WsMessage::Close(_)) => return None,
                Ok(_) => continue,
                Err(e) => return Some(Err(e.into())),
            }
        }
    }

    pub async fn close(mut self) -> Result<(), BridgeError> {
        self.ws.close(None).await?;
        Ok(())
    }
}
