#![allow(dead_code)]

use std::path::PathBuf;

use gaze_drive_bridge::message::{ControlParamsMsg, GazeMsg, Message};
use gaze_drive_bridge::{topics, BridgeClient, Envelope};
use gaze_drive_core::sim::{Pose, Waypoint, WaypointChaser};

pub fn workspace() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn scenario(name: &str) -> PathBuf {
    workspace().join("scenarios").join(name)
}

pub fn default_waypoints() -> Vec<Waypoint> {
    [(10.5, 1.25), (10.5, 6.25), (1.25, 6.25)]
        .into_iter()
        .map(|(x, y)| Waypoint {
            x,
            y,
            lead: 1.0,
            radius: 0.8,
        })
        .collect()
}

#[derive(Debug, Default)]
pub struct OperatorLog {
    pub poses: usize,
    pub gazes: usize,
    pub first_x: Option<f64>,
    pub last_x: f64,
    pub last_robot_pose_x: f64,
}

/// Connects like the operator console: follows the waypoints by gazing a
/// lead distance ahead of the robot, optionally switching damping once.
/// Runs until the server closes the connection.
pub async fn operator(url: String, waypoints: Vec<Waypoint>, damping_at: Option<(f64, f64)>) -> OperatorLog {
    let mut c = BridgeClient::connect(&url).await.expect("connect");
    c.send(&Envelope::subscribe(topics::VIRTUAL_ROBOT_POSE, 0.0)).await.unwrap();
    c.send(&Envelope::subscribe(topics::ROBOT_POSE, 0.0)).await.unwrap();
    c.send(&Envelope::advertise(topics::GAZE, "gaze_drive/Gaze", 0.0)).await.unwrap();
    c.send(&Envelope::advertise(topics::CONTROL_PARAMS, "gaze_drive/ControlParams", 0.0))
        .await
        .unwrap();
    let mut chaser = WaypointChaser::new(0.0);
    for wp in waypoints {
        chaser.push(wp);
    }
    let mut pending_damping = damping_at;
    let mut log = OperatorLog::default();
    while let Some(frame) = c.recv().await {
        let Ok(env) = frame else { break };
        let Some(Message::Pose(p)) = env.msg else { continue };
        if env.topic == topics::ROBOT_POSE {
            log.last_robot_pose_x = p.x;
            continue;
        }
        log.poses += 1;
        log.first_x.get_or_insert(p.x);
        log.last_x = p.x;
        if let Some((at, d)) = pending_damping {
            if p.stamp >= at {
                let msg = Message::ControlParams(ControlParamsMsg { damping_ns_per_m: d });
                if c.send(&Envelope::publish(topics::CONTROL_PARAMS, msg, p.stamp)).await.is_err() {
                    break;
                }
                pending_damping = None;
            }
        }
        if let Some(g) = chaser.sample(p.stamp, &Pose::new(p.x, p.y, p.theta)) {
            let msg = Message::Gaze(GazeMsg {
                x: g.x,
                y: g.y,
                valid: g.valid,
                stamp: p.stamp,
            });
            if c.send(&Envelope::publish(topics::GAZE, msg, p.stamp)).await.is_err() {
                break;
            }
            log.gazes += 1;
        }
    }
    log
}
