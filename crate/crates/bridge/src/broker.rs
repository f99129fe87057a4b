//! Topic routing between peers.
//!
//! The [`Broker`] is synchronous and owned by one dispatcher task. Each peer
//! has a bounded [`PeerQueue`] drained by its own writer, so a slow peer only
//! loses its own oldest messages.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use tokio::sync::Notify;

use crate::envelope::{Codec, CodecError, Envelope, Op};
use crate::schema::builtin_topic_schema;
use crate::session::{Direction, SessionRecorder};

pub const DEFAULT_QUEUE_CAPACITY: usize = 256;

/// Topics buffered with depth 1 per peer.
pub const LATEST_WINS_TOPICS: &[&str] = &["/gaze"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PeerId(pub u64);

impl fmt::Display for PeerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "peer#{}", self.0)
    }
}

/// Remote peers are recorded as inbound, local ones as outbound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeerKind {
    Remote,
    Local,
}

/// An envelope with its canonical wire text.
#[derive(Debug, Clone, PartialEq)]
pub struct Routed {
    pub from: PeerId,
    pub envelope: Envelope,
    pub text: String,
}

#[derive(Debug)]
pub struct PeerQueue {
    items: Mutex<VecDeque<Arc<Routed>>>,
    capacity: usize,
    dropped: AtomicU64,
    closed: AtomicBool,
    notify: Notify,
}

impl PeerQueue {
    pub fn new(capacity: usize) -> Self {
        Self {
            items: Mutex::new(VecDeque::new()),
            capacity: capacity.max(1),
            dropped: AtomicU64::new(0),
            closed: AtomicBool::new(false),
            notify: Notify::new(),
        }
    }

    /// Enqueue, evicting the oldest entry when full. Returns false if the
    /// queue is closed.
    pub fn push(&self, item: Arc<Routed>) -> bool {
        if self.is_closed() {
            return false;
        }
        {
            let mut q = self.items.lock().expect("peer queue poisoned");
            if LATEST_WINS_TOPICS.contains(&item.envelope.topic.as_str()) {
                let before = q.len();
                q.retain(|r| r.envelope.topic != item.envelope.topic);
                self.dropped.fetch_add((before - q.len()) as u64, Ordering::Relaxed);
            }
            while q.len() >= self.capacity {
                q.pop_front();
                self.dropped.fetch_add(1, Ordering::Relaxed);
            }
            q.push_back(item);
        }
        self.notify.notify_one();
        true
    }

    pub fn try_pop(&self) -> Option<Arc<Routed>> {
        self.items.lock().expect("peer queue poisoned").pop_front()
    }

    pub fn drain(&self) -> Vec<Arc<Routed>> {
        self.items.lock().expect("peer queue poisoned").drain(..).collect()
    }

    /// Wait for the next item. Returns `None` once closed and empty.
    pub async fn recv(&self) -> Option<Arc<Routed>> {
        loop {
            if let Some(item) = self.try_pop() {
                return Some(item);
            }
            if self.is_closed() {
                return None;
            }
            self.notify.notified().await;
        }
    }

    pub fn close(&self) {
        self.closed.store(true, Ordering::Release);
        self.notify.notify_one();
    }

    pub fn is_closed(&self) -> bool {
        self.closed.load(Ordering::Acquire)
    }

    pub fn len(&self) -> usize {
        self.items.lock().expect("peer queue poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dropped(&self) -> u64 {
        self.dropped.load(Ordering::Relaxed)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProtocolError {
    #[error("unknown peer {0}")]
    UnknownPeer(PeerId),
    #[error("publish on `{topic}` without prior advertise on this connection")]
    NotAdvertised { topic: String },
    #[error("topic `{topic}` carries `{expected}`, got `{found}`")]
    TypeMismatch { topic: String, expected: String, found: String },
}

#[derive(Debug, thiserror::Error)]
pub enum RouteError {
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BrokerStats {
    /// Envelopes accepted and routed (all ops).
    pub routed: u64,
    pub delivered: u64,
    pub rejected: u64,
    /// Deliveries skipped because the peer had disconnected.
    pub dropped_disconnected: u64,
    pub recorded: u64,
    pub record_errors: u64,
}

#[derive(Debug)]
struct Peer {
    kind: PeerKind,
    queue: Arc<PeerQueue>,
    advertised: BTreeMap<String, String>,
    subscribed: BTreeSet<String>,
}

#[derive(Debug)]
pub struct Broker {
    peers: BTreeMap<PeerId, Peer>,
    codec: Codec,
    queue_capacity: usize,
    recorder: Option<SessionRecorder>,
    stats: BrokerStats,
    next_local: u64,
}

impl Default for Broker {
    fn default() -> Self {
        Self::new(Codec::strict())
    }
}

impl Broker {
    pub fn new(codec: Codec) -> Self {
        Self {
            peers: BTreeMap::new(),
            codec,
            queue_capacity: DEFAULT_QUEUE_CAPACITY,
            recorder: None,
            stats: BrokerStats::default(),
            next_local: u64::MAX,
        }
    }

    pub fn with_queue_capacity(mut self, capacity: usize) -> Self {
        self.queue_capacity = capacity;
        self
    }

    pub fn with_recorder(mut self, recorder: SessionRecorder) -> Self {
        self.recorder = Some(recorder);
        self
    }

    pub fn codec(&self) -> Codec {
        self.codec
    }

    pub fn stats(&self) -> BrokerStats {
        self.stats
    }

    pub fn queue_capacity(&self) -> usize {
        self.queue_capacity
    }

    pub fn recorder_mut(&mut self) -> Option<&mut SessionRecorder> {
        self.recorder.as_mut()
    }

    pub fn take_recorder(&mut self) -> Option<SessionRecorder> {
        self.recorder.take()
    }

    /// Register a peer whose queue is drained elsewhere.
    pub fn connect(&mut self, id: PeerId, kind: PeerKind, queue: Arc<PeerQueue>) {
        self.peers.insert(
            id,
            Peer {
                kind,
                queue,
                advertised: BTreeMap::new(),
                subscribed: BTreeSet::new(),
            },
        );
    }

    /// Register an in-process peer. Local ids count down from `u64::MAX` so
    /// they never collide with socket peers.
    pub fn connect_local(&mut self) -> (PeerId, Arc<PeerQueue>) {
        let id = PeerId(self.next_local);
        self.next_local -= 1;
        let queue = Arc::new(PeerQueue::new(self.queue_capacity));
        self.connect(id, PeerKind::Local, queue.clone());
        (id, queue)
    }

    pub fn disconnect(&mut self, id: PeerId) {
        if let Some(p) = self.peers.remove(&id) {
            p.queue.close();
        }
    }

    /// Close every peer queue so writers finish and sockets close.
    pub fn close_all(&mut self) {
        for p in self.peers.values() {
            p.queue.close();
        }
        self.peers.clear();
    }

    pub fn peer_count(&self) -> usize {
        self.peers.len()
    }

    pub fn subscriber_count(&self, topic: &str) -> usize {
        self.peers.values().filter(|p| p.subscribed.contains(topic)).count()
    }

    /// Decode a text frame from `from` and route it.
    pub fn route_text(&mut self, from: PeerId, text: &str, wall_stamp: f64) -> Result<Vec<PeerId>, RouteError> {
        match self.codec.decode(text) {
            Ok(env) => Ok(self.route(from, env, wall_stamp)?),
            Err(e) => {
                self.stats.rejected += 1;
                Err(e.into())
            }
        }
    }

    /// Apply `env` from peer `from` and return the peers it was delivered to.
    pub fn route(&mut self, from: PeerId, env: Envelope, wall_stamp: f64) -> Result<Vec<PeerId>, ProtocolError> {
        let result = self.route_inner(from, &env);
        match &result {
            Ok(_) => {
                self.stats.routed += 1;
                let kind = self.peers.get(&from).map(|p| p.kind);
                if let Some(rec) = self.recorder.as_mut() {
                    let dir = if kind == Some(PeerKind::Local) {
                        Direction::Outbound
                    } else {
                        Direction::Inbound
                    };
                    match rec.record(dir, wall_stamp, &env) {
                        Ok(_) => self.stats.recorded += 1,
                        Err(e) => {
                            self.stats.record_errors += 1;
                            tracing::warn!("session record failed: {e}");
                        }
                    }
                }
            }
            Err(e) => {
                self.stats.rejected += 1;
                tracing::debug!("{from}: rejected {} on {}: {e}", env.op, env.topic);
            }
        }
        if let Ok(recipients) = &result {
            if env.op == Op::Publish {
                self.deliver(from, env, recipients);
            }
        }
        result
    }

    fn route_inner(&mut self, from: PeerId, env: &Envelope) -> Result<Vec<PeerId>, ProtocolError> {
        if !self.peers.contains_key(&from) {
            return Err(ProtocolError::UnknownPeer(from));
        }
        match env.op {
            Op::Advertise => {
                let ty = env.msg_type.clone().unwrap_or_default();
                if let Some(expected) = self.expected_type(from, &env.topic) {
                    if expected != ty {
                        return Err(ProtocolError::TypeMismatch {
                            topic: env.topic.clone(),
                            expected,
                            found: ty,
                        });
                    }
                }
                self.peer_mut(from).advertised.insert(env.topic.clone(), ty);
                Ok(Vec::new())
            }
            Op::Unadvertise => {
                self.peer_mut(from).advertised.remove(&env.topic);
                Ok(Vec::new())
            }
            Op::Subscribe => {
                self.peer_mut(from).subscribed.insert(env.topic.clone());
                Ok(Vec::new())
            }
            Op::Unsubscribe => {
                self.peer_mut(from).subscribed.remove(&env.topic);
                Ok(Vec::new())
            }
            Op::Publish => {
                let advertised = self.peers[&from]
                    .advertised
                    .get(&env.topic)
                    .ok_or_else(|| ProtocolError::NotAdvertised { topic: env.topic.clone() })?;
                let found = env.msg_type.clone().unwrap_or_default();
                if *advertised != found {
                    return Err(ProtocolError::TypeMismatch {
                        topic: env.topic.clone(),
                        expected: advertised.clone(),
                        found,
                    });
                }
                Ok(self
                    .peers
                    .iter()
                    .filter(|(id, p)| **id != from && p.subscribed.contains(&env.topic))
                    .map(|(id, _)| *id)
                    .collect())
            }
        }
    }

    fn deliver(&mut self, from: PeerId, envelope: Envelope, recipients: &[PeerId]) {
        if recipients.is_empty() {
            return;
        }
        let text = serde_json::to_string(&envelope).expect("validated envelope serializes");
        let routed = Arc::new(Routed { from, envelope, text });
        for id in recipients {
            if self.peers[id].queue.push(routed.clone()) {
                self.stats.delivered += 1;
            } else {
                self.stats.dropped_disconnected += 1;
            }
        }
    }

    fn expected_type(&self, from: PeerId, topic: &str) -> Option<String> {
        if let Some(s) = builtin_topic_schema(topic) {
            return Some(s.name.to_string());
        }
        self.peers
            .iter()
            .filter(|(id, _)| **id != from)
            .find_map(|(_, p)| p.advertised.get(topic).cloned())
    }

    fn peer_mut(&mut self, id: PeerId) -> &mut Peer {
        self.peers.get_mut(&id).expect("peer checked above")
    }

    pub fn flush_recorder(&mut self) -> std::io::Result<()> {
        match self.recorder.as_mut() {
            Some(r) => r.flush(),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::message::{ForceMsg, GazeMsg, Message};

    fn gaze(x: f64) -> Envelope {
        Envelope::publish(
            "/gaze",
            Message::Gaze(GazeMsg {
                x,
                y: 0.0,
                valid: true,
                stamp: 0.0,
            }),
            0.0,
        )
    }

    fn force(fx: f64) -> Envelope {
        Envelope::publish("/telemetry/force", Message::Force(ForceMsg { fx, fy: 0.0 }), 0.0)
    }

    #[test]
    fn publish_requires_advertise() {
        let mut b = Broker::default();
        let (a, _) = b.connect_local();
        let err = b.route(a, gaze(1.0), 0.0).unwrap_err();
        assert_eq!(err, ProtocolError::NotAdvertised { topic: "/gaze".into() });
        assert_eq!(b.stats().rejected, 1);
        b.route(a, Envelope::advertise("/gaze", "gaze_drive/Gaze", 0.0), 0.0).unwrap();
        assert!(b.route(a, gaze(1.0), 0.0).unwrap().is_empty());
    }

    #[test]
    fn builtin_topic_type_enforced() {
        let mut b = Broker::default();
        let (a, _) = b.connect_local();
        let err = b
            .route(a, Envelope::advertise("/gaze", "gaze_drive/Force2D", 0.0), 0.0)
            .unwrap_err();
        assert!(matches!(err, ProtocolError::TypeMismatch { .. }));
    }

    #[test]
    fn fan_out_excludes_sender() {
        let mut b = Broker::default();
        let (p, pq) = b.connect_local();
        let (s1, q1) = b.connect_local();
        let (s2, q2) = b.connect_local();
        for id in [p, s1, s2] {
            b.route(id, Envelope::subscribe("/telemetry/force", 0.0), 0.0).unwrap();
        }
        b.route(p, Envelope::advertise("/telemetry/force", "gaze_drive/Force2D", 0.0), 0.0)
            .unwrap();
        for i in 0..3 {
            let mut to = b.route(p, force(i as f64), 0.0).unwrap();
            to.sort();
            let mut want = vec![s1, s2];
            want.sort();
            assert_eq!(to, want);
        }
        assert!(pq.is_empty());
        for q in [q1, q2] {
            let got: Vec<f64> = q
                .drain()
                .iter()
                .map(|r| match r.envelope.msg {
                    Some(Message::Force(f)) => f.fx,
                    _ => panic!(),
                })
                .collect();
            assert_eq!(got, vec![0.0, 1.0, 2.0]);
        }
    }

    #[test]
    fn unsubscribe_applies_to_later_publishes() {
        let mut b = Broker::default();
        let (p, _) = b.connect_local();
        let (s, q) = b.connect_local();
        b.route(p, Envelope::advertise("/telemetry/force", "gaze_drive/Force2D", 0.0), 0.0)
            .unwrap();
        b.route(s, Envelope::subscribe("/telemetry/force", 0.0), 0.0).unwrap();
        b.route(p, force(1.0), 0.0).unwrap();
        b.route(s, Envelope::unsubscribe("/telemetry/force", 0.0), 0.0).unwrap();
        b.route(p, force(2.0), 0.0).unwrap();
        assert_eq!(q.len(), 1);
    }

    #[test]
    fn queue_drops_oldest_and_gaze_latest_wins() {
        let q = PeerQueue::new(3);
        let wrap = |e: Envelope| {
            Arc::new(Routed {
                from: PeerId(0),
                text: serde_json::to_string(&e).unwrap(),
                envelope: e,
            })
        };
        for i in 0..5 {
            q.push(wrap(force(i as f64)));
        }
        assert_eq!(q.len(), 3);
        assert_eq!(q.dropped(), 2);
        q.push(wrap(gaze(1.0)));
        q.push(wrap(gaze(2.0)));
        let items = q.drain();
        let gazes: Vec<_> = items.iter().filter(|r| r.envelope.topic == "/gaze").collect();
        assert_eq!(gazes.len(), 1);
        assert_eq!(gazes[0].envelope, gaze(2.0));
        q.close();
        assert!(!q.push(wrap(gaze(3.0))));
    }

    #[test]
    fn disconnected_peer_counted() {
        let mut b = Broker::default();
        let (p, _) = b.connect_local();
        let q = Arc::new(PeerQueue::new(4));
        b.connect(PeerId(1), PeerKind::Remote, q.clone());
        b.route(PeerId(1), Envelope::subscribe("/telemetry/force", 0.0), 0.0).unwrap();
        b.route(p, Envelope::advertise("/telemetry/force", "gaze_drive/Force2D", 0.0), 0.0)
            .unwrap();
        q.close();
        b.route(p, force(1.0), 0.0).unwrap();
        assert_eq!(b.stats().dropped_disconnected, 1);
        b.disconnect(PeerId(1));
        assert_eq!(b.peer_count(), 1);
    }
}
