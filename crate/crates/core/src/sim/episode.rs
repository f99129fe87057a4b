use std::io::Write;

use serde::{Deserialize, Serialize};

use super::joystick::{joystick_to_velocity, JoystickInput, DEFAULT_JOYSTICK_W_MAX};
use super::pose::{integrate, Pose};
use super::script::{InputEvent, InputKind, InputScript, Waypoint};
use super::world::{resolve_collision, Footprint, WorldModel};
use crate::admittance::{filter_step, saturate, AdmittanceParams, AdmittanceState, MAX_DT};
use crate::error::{Error, Result};
use crate::intent::{compute_force_with_mode, hold_policy, GazeSample, IntentConfig, VirtualForce};
use crate::kinematics::{forward_kinematics, inverse_kinematics, BodyVelocity, RobotGeometry, WheelSpeeds};

/// Gaze sampling period of the operator headset (30 Hz).
pub const GAZE_PERIOD: f64 = 1.0 / 30.0;
pub const DEFAULT_DT: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub world: WorldModel,
    pub geometry: RobotGeometry,
    pub params: AdmittanceParams,
    pub intent: IntentConfig,
    pub dt: f64,
    pub t_limit: f64,
    /// Yaw rate at full joystick deflection, rad/s.
    pub joystick_w_max: f64,
    /// Extra latency on the `/robot/pose` stream in live mode, seconds.
    pub pose_lag: f64,
}

impl SimConfig {
    pub fn new(world: WorldModel) -> Self {
        let geometry = RobotGeometry::default();
        Self {
            world,
            geometry,
            params: AdmittanceParams::default(),
            intent: IntentConfig::default(),
            dt: DEFAULT_DT,
            t_limit: 120.0,
            joystick_w_max: DEFAULT_JOYSTICK_W_MAX,
            pose_lag: 0.0,
        }
    }

    pub fn footprint(&self) -> Footprint {
        Footprint {
            length: self.geometry.footprint_length,
            width: self.geometry.footprint_width,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.params.validate()?;
        self.intent.layout.validate(&self.geometry)?;
        if !(self.intent.hold_timeout.is_finite() && self.intent.hold_timeout >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "gaze hold timeout must be >= 0, got {}",
                self.intent.hold_timeout
            )));
        }
        if !(self.dt > 0.0 && self.dt <= MAX_DT) {
            return Err(Error::InvalidTimestep(self.dt));
        }
        if !(self.t_limit.is_finite() && self.t_limit > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "t_limit must be > 0, got {}",
                self.t_limit
            )));
        }
        if !(self.joystick_w_max.is_finite() && self.joystick_w_max >= 0.0) {
            return Err(Error::InvalidParameter("joystick_w_max must be >= 0".into()));
        }
        if !(self.pose_lag.is_finite() && self.pose_lag >= 0.0) {
            return Err(Error::InvalidParameter("pose_lag must be >= 0".into()));
        }
        self.world.validate(&self.footprint())
    }

    /// Number of ticks that fit in `t_limit`.
    pub fn tick_limit(&self) -> u64 {
        (self.t_limit / self.dt).round() as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub t: f64,
    pub pose: Pose,
    pub force: VirtualForce,
    pub velocity: BodyVelocity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeReport {
    pub time_to_goal: Option<f64>,
    pub collision_count: u32,
    pub path_length: f64,
    pub trace: Vec<TraceSample>,
}

impl EpisodeReport {
    pub fn final_pose(&self) -> Option<Pose> {
        self.trace.last().map(|s| s.pose)
    }

    pub fn duration(&self) -> f64 {
        self.trace.last().map(|s| s.t).unwrap_or(0.0)
    }

    pub const TRACE_HEADER: [&'static str; 8] = ["t", "x", "y", "theta", "fx", "fy", "vx", "vy"];

    /// CSV with columns `t,x,y,theta,fx,fy,vx,vy` (s, m, m, rad, N, N, m/s, m/s).
    pub fn write_trace_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::TRACE_HEADER)?;
        for s in &self.trace {
            w.write_record([
                s.t.to_string(),
                s.pose.x.to_string(),
                s.pose.y.to_string(),
                s.pose.theta.to_string(),
                s.force.fx.to_string(),
                s.force.fy.to_string(),
                s.velocity.vx.to_string(),
                s.velocity.vy.to_string(),
            ])?;
        }
        w.flush()
    }

    pub fn trace_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_trace_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}

/// Synthesizes gaze at 30 Hz a fixed lead distance toward the current
/// waypoint, standing in for a human operator.
#[derive(Debug, Clone, PartialEq)]
pub struct WaypointChaser {
    route: Vec<Waypoint>,
    index: usize,
    start: f64,
    emitted: u64,
}

impl WaypointChaser {
    pub fn new(start: f64) -> Self {
        Self {
            route: Vec::new(),
            index: 0,
            start,
            emitted: 0,
        }
    }

    pub fn push(&mut self, wp: Waypoint) {
        self.route.push(wp);
    }

    pub fn current(&self) -> Option<&Waypoint> {
        self.route.get(self.index)
    }

    fn next_due(&self) -> f64 {
        self.start + self.emitted as f64 * GAZE_PERIOD
    }

    /// Gaze sample for time `t`, if one is due.
    pub fn sample(&mut self, t: f64, pose: &Pose) -> Option<GazeSample> {
        if self.route.is_empty() || t < self.next_due() {
            return None;
        }
        while t >= self.next_due() {
            self.emitted += 1;
        }
        while self.index + 1 < self.route.len() {
            let wp = &self.route[self.index];
            if (wp.x - pose.x).hypot(wp.y - pose.y) < wp.radius {
                self.index += 1;
            } else {
                break;
            }
        }
        let wp = self.route[self.index];
        let dx = wp.x - pose.x;
        let dy = wp.y - pose.y;
        let d = dx.hypot(dy);
        let (gx, gy) = if d > 0.0 {
            (pose.x + wp.lead * dx / d, pose.y + wp.lead * dy / d)
        } else {
            (pose.x, pose.y)
        };
        Some(GazeSample::new(t, gx, gy))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InputMode {
    Idle,
    Gaze,
    Joystick,
}

/// What one tick produced, for telemetry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutput {
    pub sample: TraceSample,
    pub wheels: WheelSpeeds,
    pub collided: bool,
    pub reached_goal: bool,
}

/// Fixed-timestep closed loop: gaze intent, admittance filter, inverse and
/// forward kinematics, integration, collision. Inputs are applied between
/// ticks with [`Simulation::apply`]; within one tick only the most recent gaze
/// sample counts.
#[derive(Debug, Clone)]
pub struct Simulation {
    cfg: SimConfig,
    tick: u64,
    pose: Pose,
    filter: AdmittanceState,
    mode: InputMode,
    pending_gaze: Option<GazeSample>,
    held_force: VirtualForce,
    last_gaze_at: Option<f64>,
    joystick: JoystickInput,
    chaser: Option<WaypointChaser>,
    in_contact: bool,
    finished: bool,
    report: EpisodeReport,
}

impl Simulation {
    pub fn new(cfg: SimConfig) -> Result<Self> {
        cfg.validate()?;
        let pose = cfg.world.start_pose;
        let at_goal = cfg.world.goal_region.contains(pose.x, pose.y);
        let report = EpisodeReport {
            time_to_goal: at_goal.then_some(0.0),
            collision_count: 0,
            path_length: 0.0,
            trace: vec![TraceSample {
                t: 0.0,
                pose,
                force: VirtualForce::ZERO,
                velocity: BodyVelocity::ZERO,
            }],
        };
        Ok(Self {
            cfg,
            tick: 0,
            pose,
            filter: AdmittanceState::at_rest(0.0),
            mode: InputMode::Idle,
            pending_gaze: None,
            held_force: VirtualForce::ZERO,
            last_gaze_at: None,
            joystick: JoystickInput::default(),
            chaser: None,
            in_contact: false,
            finished: at_goal,
            report,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn params(&self) -> &AdmittanceParams {
        &self.cfg.params
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    /// Time of the next tick to be executed.
    pub fn now(&self) -> f64 {
        self.tick as f64 * self.cfg.dt
    }

    pub fn pose(&self) -> Pose {
        self.pose
    }

    pub fn mode(&self) -> InputMode {
        self.mode
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn report(&self) -> &EpisodeReport {
        &self.report
    }

    pub fn into_report(self) -> EpisodeReport {
        self.report
    }

    pub fn apply(&mut self, event: &InputEvent) -> Result<()> {
        match event.kind {
            InputKind::Gaze(g) => {
                self.mode = InputMode::Gaze;
                self.pending_gaze = Some(g);
            }
            InputKind::Joy(j) => {
                self.mode = InputMode::Joystick;
                self.joystick = j;
            }
            InputKind::Damping(d) => self.cfg.params.set_damping(d)?,
            InputKind::Waypoint(wp) => {
                self.mode = InputMode::Gaze;
                self.chaser
                    .get_or_insert_with(|| WaypointChaser::new(event.t))
                    .push(wp);
            }
        }
        Ok(())
    }

    /// Advance one tick. Returns `None` once the goal has been reached.
    pub fn step(&mut self) -> Result<Option<StepOutput>> {
        if self.finished {
            return Ok(None);
        }
        let dt = self.cfg.dt;
        let t = self.now();

        if self.mode == InputMode::Gaze {
            if let Some(chaser) = self.chaser.as_mut() {
                if let Some(g) = chaser.sample(t, &self.pose) {
                    self.pending_gaze = Some(g);
                }
            }
        }
        if let Some(g) = self.pending_gaze.take() {
            if g.valid && g.x.is_finite() && g.y.is_finite() {
                self.held_force = compute_force_with_mode(
                    &g,
                    &self.pose,
                    self.cfg.params.stiffness,
                    &self.cfg.intent.layout,
                    self.cfg.intent.force_mode,
                )?;
                self.last_gaze_at = Some(t);
            }
        }

        let force = match (self.mode, self.last_gaze_at) {
            (InputMode::Gaze, Some(at)) => {
                hold_policy(self.held_force, t - at, self.cfg.intent.hold_timeout)
            }
            _ => VirtualForce::ZERO,
        };

        let v_max = self.cfg.params.v_max;
        let command = match self.mode {
            InputMode::Joystick => {
                let v = joystick_to_velocity(&self.joystick, v_max, self.cfg.joystick_w_max);
                let v = saturate(v, v_max);
                self.filter = AdmittanceState {
                    v: BodyVelocity::new(v.vx, v.vy, 0.0),
                    t_last: self.filter.t_last + dt,
                };
                v
            }
            InputMode::Gaze | InputMode::Idle => {
                self.filter = filter_step(&self.filter, &force, &self.cfg.params, dt)?;
                self.filter.v
            }
        };

        let geom = &self.cfg.geometry;
        let wheels = inverse_kinematics(&command, geom)?;
        let executed = saturate(forward_kinematics(&wheels, geom)?, v_max);
        let candidate = integrate(&self.pose, &executed, dt);
        let (next, collided) =
            resolve_collision(&self.pose, &candidate, &self.cfg.world, &self.cfg.footprint());

        let velocity = if collided {
            if !self.in_contact {
                self.report.collision_count += 1;
            }
            self.in_contact = true;
            BodyVelocity::ZERO
        } else {
            self.in_contact = false;
            executed
        };

        self.report.path_length += self.pose.distance_to(&next);
        self.pose = next;
        self.tick += 1;
        let sample = TraceSample {
            t: self.now(),
            pose: next,
            force,
            velocity,
        };
        self.report.trace.push(sample);

        let reached_goal = self.cfg.world.goal_region.contains(next.x, next.y);
        if reached_goal {
            self.report.time_to_goal = Some(sample.t);
            self.finished = true;
        }
        Ok(Some(StepOutput {
            sample,
            wheels,
            collided,
            reached_goal,
        }))
    }
}

/// Run a scripted episode to goal entry or the time limit.
pub fn run_episode(cfg: &SimConfig, script: &InputScript) -> Result<EpisodeReport> {
    let mut sim = Simulation::new(cfg.clone())?;
    let limit = cfg.tick_limit();
    let mut events = script.events.iter().peekable();
    while sim.tick() < limit && !sim.is_finished() {
        let t = sim.now();
        while let Some(e) = events.next_if(|e| e.t <= t) {
            sim.apply(e)?;
        }
        sim.step()?;
    }
    Ok(sim.into_report())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::world::Rect;

    fn corridor() -> SimConfig {
        let world = WorldModel {
            bounds: Rect::new(0.0, 0.0, 20.0, 2.0),
            obstacles: vec![],
            start_pose: Pose::new(1.0, 1.0, 0.0),
            goal_region: Rect::new(6.0, 0.0, 8.0, 2.0),
            operator_offset: 0.5,
        };
        let mut cfg = SimConfig::new(world);
        cfg.t_limit = 30.0;
        cfg
    }

    fn chase_far_ahead() -> InputScript {
        InputScript::new(vec![InputEvent {
            t: 0.0,
            kind: InputKind::Waypoint(Waypoint {
                x: 19.0,
                y: 1.0,
                lead: 1.0,
                radius: 0.5,
            }),
        }])
        .unwrap()
    }

    #[test]
    fn empty_script_goes_nowhere() {
        let cfg = corridor();
        let r = run_episode(&cfg, &InputScript::default()).unwrap();
        assert_eq!(r.time_to_goal, None);
        assert_eq!(r.final_pose(), Some(cfg.world.start_pose));
        assert_eq!(r.path_length, 0.0);
        assert_eq!(r.trace.len() as u64, cfg.tick_limit() + 1);
    }

    #[test]
    fn straight_corridor_matches_ramp_plus_cruise() {
        let cfg = corridor();
        let r = run_episode(&cfg, &chase_far_ahead()).unwrap();
        // x(T) = u (T - tau (1 - e^{-T/tau})) = 5 with u = 0.5, tau = 0.5
        let t_goal = r.time_to_goal.unwrap();
        let closed_form = 10.0 + 0.5;
        assert!((t_goal - closed_form).abs() < 0.03, "{t_goal}");
        assert_eq!(r.collision_count, 0);
    }

    #[test]
    fn trace_times_strictly_increase() {
        let r = run_episode(&corridor(), &chase_far_ahead()).unwrap();
        for w in r.trace.windows(2) {
            assert!(w[1].t > w[0].t);
        }
    }

    #[test]
    fn lower_damping_is_faster_on_straight() {
        let mut cfg = corridor();
        let mut times = vec![];
        for d in [10.0, 20.0, 30.0] {
            cfg.params.damping = d;
            times.push(run_episode(&cfg, &chase_far_ahead()).unwrap().time_to_goal.unwrap());
        }
        assert!(times[0] < times[1] && times[1] < times[2], "{times:?}");
    }

    #[test]
    fn joystick_drives_at_cap() {
        let cfg = corridor();
        let script = InputScript::new(vec![InputEvent {
            t: 0.0,
            kind: InputKind::Joy(JoystickInput::new(1.0, 0.0, 0.0)),
        }])
        .unwrap();
        let r = run_episode(&cfg, &script).unwrap();
        let t = r.time_to_goal.unwrap();
        assert!((t - 10.0).abs() < 0.02, "{t}");
        assert!(r.trace.iter().all(|s| s.velocity.vx <= 0.5));
    }

    #[test]
    fn gaze_dropout_brings_robot_to_rest() {
        let cfg = corridor();
        let mut events = vec![];
        let mut t = 0.0;
        while t < 2.0 {
            events.push(InputEvent {
                t,
                kind: InputKind::Gaze(GazeSample::new(t, 1.0 + 1.0 + t * 0.5, 1.0)),
            });
            t += GAZE_PERIOD;
        }
        events.push(InputEvent {
            t,
            kind: InputKind::Gaze(GazeSample::invalid(t)),
        });
        let r = run_episode(&cfg, &InputScript::new(events).unwrap()).unwrap();
        let last = r.trace.last().unwrap();
        assert!(last.velocity.vx.abs() < 1e-9);
        assert_eq!(last.force, VirtualForce::ZERO);
    }

    #[test]
    fn blocked_robot_counts_one_contact() {
        let mut cfg = corridor();
        cfg.world.obstacles.push(Rect::new(3.0, 0.0, 3.5, 2.0));
        cfg.t_limit = 10.0;
        let r = run_episode(&cfg, &chase_far_ahead()).unwrap();
        assert_eq!(r.collision_count, 1);
        assert!(r.final_pose().unwrap().x + 0.375 <= 3.0);
    }

    #[test]
    fn damping_event_changes_params() {
        let cfg = corridor();
        let mut sim = Simulation::new(cfg).unwrap();
        sim.apply(&InputEvent {
            t: 0.0,
            kind: InputKind::Damping(30.0),
        })
        .unwrap();
        assert_eq!(sim.params().damping, 30.0);
        assert!(sim
            .apply(&InputEvent {
                t: 0.0,
                kind: InputKind::Damping(-1.0),
            })
            .is_err());
    }
}
