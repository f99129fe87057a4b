//! Live operation: the broker plus a paced simulation, and replay of
//! recorded sessions.
//!
//! The sim tick loop is the only dispatcher. On tick `k` it routes every
//! frame that arrived since the previous tick, stamping and recording it
//! with the sim time `t_k`, applies the inputs the sim is subscribed to, then
//! steps and publishes telemetry. A session replayed headless applies each
//! recorded input at its recorded stamp, which lands it on the same tick.

use std::future::Future;
use std::path::PathBuf;
use std::time::Duration;

use anyhow::{Context, Result};
use gaze_drive_bridge::message::*;
use gaze_drive_bridge::{
    apply_event, topics, BridgeListener, Broker, BrokerStats, Codec, Direction, Envelope, Op, PeerId, SessionEvent,
    SessionRecorder,
};
use gaze_drive_core::intent::GazeSample;
use gaze_drive_core::sim::{
    EpisodeReport, InputEvent, InputKind, InputScript, JoystickInput, SimConfig, Simulation, StepOutput,
};
use tokio::time::MissedTickBehavior;

/// Topics the simulation consumes.
pub const SIM_INPUT_TOPICS: [&str; 3] = [topics::GAZE, topics::JOY, topics::CONTROL_PARAMS];

/// Topics the simulation publishes every tick, with their types.
pub const SIM_OUTPUT_TOPICS: [(&str, &str); 5] = [
    (topics::VIRTUAL_ROBOT_POSE, "gaze_drive/Pose2D"),
    (topics::ROBOT_POSE, "gaze_drive/Pose2D"),
    (topics::CMD_VEL, "gaze_drive/Twist2D"),
    (topics::WHEEL_CMD, "gaze_drive/WheelCmd"),
    (topics::TELEMETRY_FORCE, "gaze_drive/Force2D"),
];

/// Sim input for a publish on one of [`SIM_INPUT_TOPICS`], applied at `t`.
pub fn input_from_envelope(env: &Envelope, t: f64) -> Option<InputEvent> {
    if env.op != Op::Publish {
        return None;
    }
    let kind = match (env.topic.as_str(), env.msg.as_ref()?) {
        (topics::GAZE, Message::Gaze(g)) if g.valid => InputKind::Gaze(GazeSample::new(t, g.x, g.y)),
        (topics::GAZE, Message::Gaze(_)) => InputKind::Gaze(GazeSample::invalid(t)),
        (topics::JOY, Message::Joy(j)) => InputKind::Joy(JoystickInput::new(j.axis_x, j.axis_y, j.axis_yaw)),
        (topics::CONTROL_PARAMS, Message::ControlParams(p)) => InputKind::Damping(p.damping_ns_per_m),
        _ => return None,
    };
    Some(InputEvent { t, kind })
}

/// Apply an input, logging instead of failing on values the sim refuses
/// (for example a non-positive damping).
pub fn apply_input(sim: &mut Simulation, event: &InputEvent) {
    if let Err(e) = sim.apply(event) {
        tracing::warn!("ignored input at t={}: {e}", event.t);
    }
}

#[derive(Debug, Clone)]
pub struct ServeOptions {
    pub record: Option<PathBuf>,
    pub strict_schema: bool,
    /// Sim seconds per wall second; 0 runs unpaced.
    pub speed: f64,
    /// Stop after this many ticks (mainly for tests).
    pub max_ticks: Option<u64>,
}

impl Default for ServeOptions {
    fn default() -> Self {
        Self {
            record: None,
            strict_schema: false,
            speed: 1.0,
            max_ticks: None,
        }
    }
}

#[derive(Debug)]
pub struct ServeOutcome {
    pub report: EpisodeReport,
    pub stats: BrokerStats,
    pub ticks: u64,
}

struct LiveSim {
    sim: Simulation,
    id: PeerId,
    lag_ticks: usize,
}

impl LiveSim {
    fn publish_all(&self, broker: &mut Broker, out: Option<&StepOutput>) {
        let report = self.sim.report();
        let last = *report.trace.last().expect("trace starts with t=0");
        let lagged = report.trace[report.trace.len().saturating_sub(1 + self.lag_ticks)];
        let pose = |s: &gaze_drive_core::sim::TraceSample| {
            Message::Pose(PoseMsg {
                x: s.pose.x,
                y: s.pose.y,
                theta: s.pose.theta,
                stamp: s.t,
            })
        };
        let (v, w, f) = match out {
            Some(o) => (o.sample.velocity, o.wheels.w, o.sample.force),
            None => Default::default(),
        };
        let stamp = last.t;
        let msgs = [
            (topics::VIRTUAL_ROBOT_POSE, pose(&last)),
            (topics::ROBOT_POSE, pose(&lagged)),
            (
                topics::CMD_VEL,
                Message::Twist(TwistMsg {
                    vx: v.vx,
                    vy: v.vy,
                    omega: v.omega,
                }),
            ),
            (topics::WHEEL_CMD, Message::WheelCmd(WheelCmdMsg { w })),
            (topics::TELEMETRY_FORCE, Message::Force(ForceMsg { fx: f.fx, fy: f.fy })),
        ];
        for (topic, msg) in msgs {
            if let Err(e) = broker.route(self.id, Envelope::publish(topic, msg, stamp), stamp) {
                tracing::error!("sim publish on {topic} rejected: {e}");
            }
        }
    }
}

/// Run the broker and the live simulation until `shutdown` resolves (or
/// `max_ticks` elapse). The session log, if any, is flushed before return.
pub async fn serve(
    cfg: SimConfig,
    listener: BridgeListener,
    opts: ServeOptions,
    shutdown: impl Future<Output = ()>,
) -> Result<ServeOutcome> {
    anyhow::ensure!(
        opts.speed.is_finite() && opts.speed >= 0.0,
        "speed must be a finite number >= 0, got {}",
        opts.speed
    );
    let codec = if opts.strict_schema {
        Codec::strict()
    } else {
        Codec::lenient()
    };
    let mut broker = Broker::new(codec);
    if let Some(path) = &opts.record {
        let rec = SessionRecorder::create(path).with_context(|| format!("{}: cannot create session log", path.display()))?;
        broker = broker.with_recorder(rec);
    }
    let lag_ticks = (cfg.pose_lag / cfg.dt).round() as usize;
    let dt = cfg.dt;
    let sim = Simulation::new(cfg)?;
    let (id, inbox) = broker.connect_local();
    for topic in SIM_INPUT_TOPICS {
        broker.route(id, Envelope::subscribe(topic, 0.0), 0.0)?;
    }
    for (topic, ty) in SIM_OUTPUT_TOPICS {
        broker.route(id, Envelope::advertise(topic, ty, 0.0), 0.0)?;
    }
    let mut live = LiveSim { sim, id, lag_ticks };

    let (accept, mut events) = listener.spawn();
    let mut pacer = (opts.speed > 0.0).then(|| {
        let mut iv = tokio::time::interval(Duration::from_secs_f64(dt / opts.speed));
        iv.set_missed_tick_behavior(MissedTickBehavior::Delay);
        iv
    });
    tokio::pin!(shutdown);
    let mut ticks = 0u64;
    loop {
        let pace = async {
            match pacer.as_mut() {
                Some(iv) => {
                    iv.tick().await;
                }
                None => tokio::task::yield_now().await,
            }
        };
        tokio::select! {
            biased;
            _ = &mut shutdown => break,
            _ = pace => {}
        }
        if opts.max_ticks.is_some_and(|m| ticks >= m) {
            break;
        }
        let t = live.sim.now();
        while let Ok(ev) = events.try_recv() {
            let _ = apply_event(&mut broker, ev, t);
        }
        for routed in inbox.drain() {
            if let Some(input) = input_from_envelope(&routed.envelope, t) {
                apply_input(&mut live.sim, &input);
            }
        }
        let out = live.sim.step()?;
        live.publish_all(&mut broker, out.as_ref());
        ticks += 1;
    }

    accept.abort();
    broker.close_all();
    broker.flush_recorder().context("flushing session log")?;
    let stats = broker.stats();
    drop(broker);
    Ok(ServeOutcome {
        report: live.sim.into_report(),
        stats,
        ticks,
    })
}

/// Inputs recovered from a session log.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionInputs {
    pub script: InputScript,
    /// Ticks the live simulation executed.
    pub ticks: u64,
}

/// Inbound publishes the sim consumed, stamped with their recorded time, and
/// the number of ticks covered by the recorded pose stream.
pub fn session_inputs(events: &[SessionEvent], dt: f64) -> Result<SessionInputs> {
    let mut inputs = Vec::new();
    let mut last_pose: Option<f64> = None;
    for ev in events {
        match ev.direction {
            Direction::Inbound => {
                if SIM_INPUT_TOPICS.contains(&ev.envelope.topic.as_str()) {
                    if let Some(input) = input_from_envelope(&ev.envelope, ev.wall_stamp) {
                        inputs.push(input);
                    }
                }
            }
            Direction::Outbound => {
                if let (topics::VIRTUAL_ROBOT_POSE, Some(Message::Pose(p))) =
                    (ev.envelope.topic.as_str(), ev.envelope.msg.as_ref())
                {
                    last_pose = Some(last_pose.map_or(p.stamp, |l| l.max(p.stamp)));
                }
            }
        }
    }
    let ticks = last_pose.map_or(0, |t| (t / dt).round() as u64);
    Ok(SessionInputs {
        script: InputScript::new(inputs)?,
        ticks,
    })
}

/// Re-run a recorded session headless. Matches the live loop tick for tick,
/// so the report is identical to the one the live run produced.
pub fn replay_episode(cfg: &SimConfig, inputs: &SessionInputs) -> Result<EpisodeReport> {
    let mut sim = Simulation::new(cfg.clone())?;
    let mut events = inputs.script.events.iter().peekable();
    while sim.tick() < inputs.ticks && !sim.is_finished() {
        let t = sim.now();
        while let Some(e) = events.next_if(|e| e.t <= t) {
            apply_input(&mut sim, e);
        }
        sim.step()?;
    }
    Ok(sim.into_report())
}
