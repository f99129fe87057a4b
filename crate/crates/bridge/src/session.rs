//! Session logs: one [`SessionEvent`] per line (JSON Lines), append-only.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::envelope::Envelope;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Inbound,
    Outbound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionEvent {
    pub seq: u64,
    pub wall_stamp: f64,
    pub direction: Direction,
    pub envelope: Envelope,
}

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error("session log I/O: {0}")]
    Io(#[from] io::Error),
    #[error("corrupt session log at line {line} (seq {seq}): {message}")]
    Corrupt { seq: u64, line: usize, message: String },
    #[error("session log integrity: missing seq {missing} (next record has seq {found})")]
    Gap { missing: u64, found: u64 },
    #[error("session log integrity: seq {found} out of order, expected {expected}")]
    OutOfOrder { expected: u64, found: u64 },
    #[error("replay speed must be a finite number >= 0, got {0}")]
    InvalidSpeed(f64),
}

/// Appends events with consecutive sequence numbers starting at 0.
pub struct SessionRecorder {
    out: Box<dyn Write + Send>,
    next_seq: u64,
}

impl std::fmt::Debug for SessionRecorder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SessionRecorder").field("next_seq", &self.next_seq).finish()
    }
}

impl SessionRecorder {
    pub fn new(out: impl Write + Send + 'static) -> Self {
        Self {
            out: Box::new(out),
            next_seq: 0,
        }
    }

    pub fn create(path: &Path) -> io::Result<Self> {
        Ok(Self::new(BufWriter::new(File::create(path)?)))
    }

    pub fn record(&mut self, direction: Direction, wall_stamp: f64, envelope: &Envelope) -> io::Result<u64> {
        let event = SessionEvent {
            seq: self.next_seq,
            wall_stamp,
            direction,
            envelope: envelope.clone(),
        };
        let line = serde_json::to_string(&event).map_err(io::Error::other)?;
        self.out.write_all(line.as_bytes())?;
        self.out.write_all(b"\n")?;
        self.next_seq += 1;
        Ok(event.seq)
    }

    pub fn events_written(&self) -> u64 {
        self.next_seq
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.out.flush()
    }
}

impl Drop for SessionRecorder {
    fn drop(&mut self) {
        let _ = self.out.flush();
    }
}

/// Streams events from a log, checking sequence integrity. Stops after the
/// first error.
pub struct SessionReader<R> {
    lines: io::Lines<R>,
    line_no: usize,
    expected: u64,
    failed: bool,
}

impl<R: BufRead> SessionReader<R> {
    pub fn new(reader: R) -> Self {
        Self {
            lines: reader.lines(),
            line_no: 0,
            expected: 0,
            failed: false,
        }
    }
}

impl SessionReader<BufReader<File>> {
    pub fn open(path: &Path) -> Result<Self, SessionError> {
        Ok(Self::new(BufReader::new(File::open(path)?)))
    }
}

impl<R: BufRead> Iterator for SessionReader<R> {
    type Item = Result<SessionEvent, SessionError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        let result = loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => break Err(SessionError::Io(e)),
            };
            self.line_no += 1;
            if line.trim().is_empty() {
                continue;
            }
            break match serde_json::from_str::<SessionEvent>(&line) {
                Err(e) => Err(SessionError::Corrupt {
                    seq: self.expected,
                    line: self.line_no,
                    message: e.to_string(),
                }),
                Ok(ev) if ev.seq > self.expected => Err(SessionError::Gap {
                    missing: self.expected,
                    found: ev.seq,
                }),
                Ok(ev) if ev.seq < self.expected => Err(SessionError::OutOfOrder {
                    expected: self.expected,
                    found: ev.seq,
                }),
                Ok(ev) => {
                    self.expected += 1;
                    Ok(ev)
                }
            };
        };
        self.failed = result.is_err();
        Some(result)
    }
}

pub fn read_session(reader: impl BufRead) -> Result<Vec<SessionEvent>, SessionError> {
    SessionReader::new(reader).collect()
}

pub fn load_session(path: &Path) -> Result<Vec<SessionEvent>, SessionError> {
    SessionReader::open(path)?.collect()
}

/// Inbound events of a session, re-timed for replay. Offsets are relative to
/// the first inbound event and divided by `speed`; speed 0 means no waiting.
#[derive(Debug, Clone)]
pub struct Replay {
    events: Vec<SessionEvent>,
    speed: f64,
}

impl Replay {
    pub fn new(events: Vec<SessionEvent>, speed: f64) -> Result<Self, SessionError> {
        if !(speed.is_finite() && speed >= 0.0) {
            return Err(SessionError::InvalidSpeed(speed));
        }
        let events = events
            .into_iter()
            .filter(|e| e.direction == Direction::Inbound)
            .collect();
        Ok(Self { events, speed })
    }

    pub fn events(&self) -> &[SessionEvent] {
        &self.events
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    /// Scheduled send offset for each event.
    pub fn schedule(&self) -> Vec<(Duration, &Envelope)> {
        let t0 = self.events.first().map_or(0.0, |e| e.wall_stamp);
        self.events
            .iter()
            .map(|e| {
                let offset = if self.speed == 0.0 {
                    Duration::ZERO
                } else {
                    Duration::from_secs_f64(((e.wall_stamp - t0) / self.speed).max(0.0))
                };
                (offset, &e.envelope)
            })
            .collect()
    }

    /// Hand each envelope to `sink` at its scheduled time.
    pub async fn play<F, E>(&self, mut sink: F) -> Result<usize, E>
    where
        F: FnMut(&Envelope) -> Result<(), E>,
    {
        let start = tokio::time::Instant::now();
        let mut sent = 0;
        for (offset, env) in self.schedule() {
            if !offset.is_zero() {
                tokio::time::sleep_until(start + offset).await;
            }
            sink(env)?;
            sent += 1;
        }
        Ok(sent)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::message::{GazeMsg, Message};
    use std::sync::{Arc, Mutex};

    #[derive(Clone, Default)]
    struct Shared(Arc<Mutex<Vec<u8>>>);

    impl Write for Shared {
        fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
            self.0.lock().unwrap().extend_from_slice(buf);
            Ok(buf.len())
        }
        fn flush(&mut self) -> io::Result<()> {
            Ok(())
        }
    }

    fn gaze(x: f64) -> Envelope {
        Envelope::publish(
            "/gaze",
            Message::Gaze(GazeMsg {
                x,
                y: 0.0,
                valid: true,
                stamp: x,
            }),
            x,
        )
    }

    fn record(n: usize) -> String {
        let buf = Shared::default();
        let mut rec = SessionRecorder::new(buf.clone());
        for i in 0..n {
            let dir = if i % 2 == 0 { Direction::Inbound } else { Direction::Outbound };
            rec.record(dir, i as f64 * 0.1, &gaze(i as f64)).unwrap();
        }
        drop(rec);
        let bytes = buf.0.lock().unwrap().clone();
        String::from_utf8(bytes).unwrap()
    }

    #[test]
    fn roundtrip() {
        let text = record(5);
        assert_eq!(text.lines().count(), 5);
        let events = read_session(text.as_bytes()).unwrap();
        assert_eq!(events.len(), 5);
        for (i, e) in events.iter().enumerate() {
            assert_eq!(e.seq, i as u64);
            assert_eq!(e.envelope, gaze(i as f64));
        }
    }

    #[test]
    fn empty_log_is_empty_replay() {
        let events = read_session(&b""[..]).unwrap();
        let replay = Replay::new(events, 0.0).unwrap();
        assert!(replay.is_empty());
        assert!(replay.schedule().is_empty());
    }

    #[test]
    fn gap_names_missing_seq() {
        let text = record(4);
        let kept: Vec<&str> = text.lines().enumerate().filter(|(i, _)| *i != 2).map(|(_, l)| l).collect();
        let err = read_session(kept.join("\n").as_bytes()).unwrap_err();
        assert!(matches!(err, SessionError::Gap { missing: 2, found: 3 }), "{err}");
        assert!(err.to_string().contains("missing seq 2"));
    }

    #[test]
    fn corrupt_line_reports_seq_and_halts() {
        let text = record(4);
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        lines[1] = "{\"seq\":1,\"wall_stamp\":".into();
        let joined = lines.join("\n");
        let items: Vec<_> = SessionReader::new(joined.as_bytes()).collect();
        assert_eq!(items.len(), 2);
        assert!(items[0].is_ok());
        assert!(matches!(items[1], Err(SessionError::Corrupt { seq: 1, line: 2, .. })));
    }

    #[test]
    fn replay_keeps_inbound_and_scales_time() {
        let events = read_session(record(6).as_bytes()).unwrap();
        let replay = Replay::new(events.clone(), 2.0).unwrap();
        let sched = replay.schedule();
        assert_eq!(sched.len(), 3);
        let offsets: Vec<f64> = sched.iter().map(|(d, _)| d.as_secs_f64()).collect();
        assert!((offsets[1] - 0.1).abs() < 1e-9 && (offsets[2] - 0.2).abs() < 1e-9);
        assert!(Replay::new(events, -1.0).is_err());
    }
}
