//! WebSocket transport at `ws://host:port/bridge`.
//!
//! Each connection gets a reader that forwards text frames to the dispatcher
//! as [`PeerEvent`]s and a writer that drains the peer's [`PeerQueue`].

use std::future::Future;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use futures_util::{SinkExt, StreamExt};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::mpsc;
use tokio::task::JoinHandle;
use tokio_tungstenite::tungstenite::handshake::server::{ErrorResponse, Request, Response};
use tokio_tungstenite::tungstenite::http::StatusCode;
use tokio_tungstenite::tungstenite::Message as WsMessage;

use crate::broker::{Broker, PeerId, PeerKind, PeerQueue, RouteError};
use crate::error::BridgeError;

pub const BRIDGE_PATH: &str = "/bridge";
pub const DEFAULT_PORT: u16 = 9090;
const EVENT_CHANNEL_DEPTH: usize = 1024;

#[derive(Debug)]
pub enum PeerEvent {
    Connected {
        peer: PeerId,
        addr: SocketAddr,
        queue: Arc<PeerQueue>,
    },
    Frame {
        peer: PeerId,
        text: String,
    },
    Disconnected {
        peer: PeerId,
    },
}

#[derive(Debug)]
pub struct BridgeListener {
    listener: TcpListener,
    queue_capacity: usize,
}

impl BridgeListener {
    pub async fn bind(addr: SocketAddr, queue_capacity: usize) -> Result<Self, BridgeError> {
        let listener = TcpListener::bind(addr)
            .await
            .map_err(|source| BridgeError::Bind { addr, source })?;
        Ok(Self {
            listener,
            queue_capacity,
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.listener.local_addr().expect("bound listener has an address")
    }

    pub fn url(&self) -> String {
        format!("ws://{}{BRIDGE_PATH}", self.local_addr())
    }

    /// Start accepting. Events for every connection arrive on the returned
    /// receiver; dropping it stops the accept loop at the next connection.
    pub fn spawn(self) -> (JoinHandle<()>, mpsc::Receiver<PeerEvent>) {
        let (tx, rx) = mpsc::channel(EVENT_CHANNEL_DEPTH);
        let next_id = Arc::new(AtomicU64::new(1));
        let handle = tokio::spawn(async move {
            loop {
                let (stream, addr) = match self.listener.accept().await {
                    Ok(x) => x,
                    Err(e) => {
                        tracing::warn!("accept failed: {e}");
                        continue;
                    }
                };
                if tx.is_closed() {
                    break;
                }
                let peer = PeerId(next_id.fetch_add(1, Ordering::Relaxed));
                tokio::spawn(connection(stream, addr, peer, tx.clone(), self.queue_capacity));
            }
        });
        (handle, rx)
    }
}

fn check_path(req: &Request, resp: Response) -> Result<Response, ErrorResponse> {
    if req.uri().path() == BRIDGE_PATH {
        Ok(resp)
    } else {
        let mut err = ErrorResponse::new(Some(format!("no endpoint at {}; use {BRIDGE_PATH}", req.uri().path())));
        *err.status_mut() = StatusCode::NOT_FOUND;
        Err(err)
    }
}

async fn connection(stream: TcpStream, addr: SocketAddr, peer: PeerId, tx: mpsc::Sender<PeerEvent>, capacity: usize) {
    let ws = match tokio_tungstenite::accept_hdr_async(stream, check_path).await {
        Ok(ws) => ws,
        Err(e) => {
            tracing::debug!("handshake with {addr} failed: {e}");
            return;
        }
    };
    let (mut sink, mut source) = ws.split();
    let queue = Arc::new(PeerQueue::new(capacity));
    let connected = PeerEvent::Connected {
        peer,
        addr,
        queue: queue.clone(),
    };
    if tx.send(connected).await.is_err() {
        return;
    }
    tracing::info!("{peer} connected from {addr}");

    let out = queue.clone();
    let writer = tokio::spawn(async move {
        while let Some(item) = out.recv().await {
            if sink.send(WsMessage::text(item.text.as_str())).await.is_err() {
                break;
            }
        }
        let _ = sink.close().await;
    });

    while let Some(frame) = source.next().await {
        let text = match frame {
            Ok(WsMessage::Text(t)) => t.as_str().to_owned(),
            Ok(WsMessage::Binary(b)) => match String::from_utf8(b.to_vec()) {
                Ok(t) => t,
                Err(_) => {
                    tracing::warn!("{peer}: dropped non-UTF-8 binary frame");
                    continue;
                }
            },
            Ok(WsMessage::Close(_)) => break,
            Ok(_) => continue,
            Err(e) => {
                tracing::debug!("{peer}: read error: {e}");
                break;
            }
        };
        if tx.send(PeerEvent::Frame { peer, text }).await.is_err() {
            break;
        }
    }
    queue.close();
    let _ = tx.send(PeerEvent::Disconnected { peer }).await;
    let _ = writer.await;
    tracing::info!("{peer} disconnected");
}

/// Apply one transport event to the broker. Rejected frames are logged and
/// returned; they never stop the dispatcher.
pub fn apply_event(broker: &mut Broker, event: PeerEvent, wall_stamp: f64) -> Result<(), RouteError> {
    match event {
        PeerEvent::Connected { peer, queue, .. } => {
            broker.connect(peer, PeerKind::Remote, queue);
            Ok(())
        }
        PeerEvent::Disconnected { peer } => {
            broker.disconnect(peer);
            Ok(())
        }
        PeerEvent::Frame { peer, text } => {
            let result = broker.route_text(peer, &text, wall_stamp).map(|_| ());
            if let Err(e) = &result {
                tracing::warn!("{peer}: {e}");
            }
            result
        }
    }
}

/// Route events until `shutdown` resolves, stamping with seconds since start.
/// Returns the broker so callers can inspect stats or the recorder.
pub async fn run_broker(mut broker: Broker, mut events: mpsc::Receiver<PeerEvent>, shutdown: impl Future<Output = ()>) -> Broker {
    let start = tokio::time::Instant::now();
    tokio::pin!(shutdown);
    loop {
        tokio::select! {
            _ = &mut shutdown => break,
            ev = events.recv() => match ev {
                Some(ev) => {
                    let _ = apply_event(&mut broker, ev, start.elapsed().as_secs_f64());
                }
                None => break,
            },
        }
    }
    broker.close_all();
    if let Err(e) = broker.flush_recorder() {
        tracing::warn!("session flush failed: {e}");
    }
    broker
}
