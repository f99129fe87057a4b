mod common;

use gaze_drive::live::{replay_episode, serve, session_inputs, ServeOptions, ServeOutcome};
use gaze_drive_bridge::session::load_session;
use gaze_drive_bridge::{topics, BridgeClient, BridgeListener, Direction, Envelope};
use gaze_drive_core::sim::SimConfig;

fn config() -> SimConfig {
    gaze_drive::config::load_scenario(&common::scenario("default.toml"))
        .unwrap()
        .to_sim_config()
        .unwrap()
}

async fn listener() -> BridgeListener {
    BridgeListener::bind("127.0.0.1:0".parse().unwrap(), 256).await.unwrap()
}

fn opts(record: Option<std::path::PathBuf>, max_ticks: u64) -> ServeOptions {
    ServeOptions {
        record,
        strict_schema: false,
        speed: 0.0,
        max_ticks: Some(max_ticks),
    }
}

#[tokio::test(flavor = "multi_thread")]
async fn no_clients_robot_stays_put() {
    let cfg = config();
    let start = cfg.world.start_pose;
    let out: ServeOutcome = serve(cfg, listener().await, opts(None, 300), std::future::pending())
        .await
        .unwrap();
    assert_eq!(out.ticks, 300);
    assert_eq!(out.report.trace.len(), 301);
    assert_eq!(out.report.final_pose(), Some(start));
    assert_eq!(out.report.path_length, 0.0);
    assert_eq!(out.report.time_to_goal, None);
    assert_eq!(out.stats.routed, 3 + 5 + 300 * 5);
}

#[tokio::test(flavor = "multi_thread")]
async fn operator_drives_and_session_replays_exactly() {
    let cfg = config();
    let dir = tempfile::tempdir().unwrap();
    let session = dir.path().join("s.jsonl");
    let l = listener().await;
    let url = l.url();
    let mut o = opts(Some(session.clone()), 1500);
    o.speed = 10.0;
    let op = tokio::spawn(common::operator(url, common::default_waypoints(), Some((3.0, 15.0))));
    let out = serve(cfg.clone(), l, o, std::future::pending()).await.unwrap();
    let log = op.await.unwrap();

    assert!(log.poses > 100, "operator saw {} poses", log.poses);
    assert!(log.gazes > 50);
    assert!(log.last_x > log.first_x.unwrap() + 0.3, "robot x did not advance: {log:?}");
    assert_eq!(log.last_robot_pose_x, log.last_x, "lag is zero in the default scenario");

    let events = load_session(&session).unwrap();
    assert_eq!(events.len() as u64, out.stats.routed);
    assert_eq!(out.stats.recorded, out.stats.routed);
    assert!(events.iter().any(|e| e.direction == Direction::Inbound && e.envelope.topic == topics::CONTROL_PARAMS));
    for w in events.windows(2) {
        assert!(w[0].wall_stamp <= w[1].wall_stamp);
        assert_eq!(w[1].seq, w[0].seq + 1);
    }

    let inputs = session_inputs(&events, cfg.dt).unwrap();
    assert_eq!(inputs.ticks, out.ticks);
    let replayed = replay_episode(&cfg, &inputs).unwrap();
    assert_eq!(replayed, out.report);
}

#[tokio::test(flavor = "multi_thread")]
async fn publish_before_advertise_is_not_routed_to_the_sim() {
    let cfg = config();
    let start = cfg.world.start_pose;
    let l = listener().await;
    let url = l.url();
    let client = tokio::spawn(async move {
        let mut c = BridgeClient::connect(&url).await.unwrap();
        c.send(&Envelope::subscribe(topics::VIRTUAL_ROBOT_POSE, 0.0)).await.unwrap();
        let mut frames = 0;
        while let Some(Ok(env)) = c.recv().await {
            frames += 1;
            if let Some(gaze_drive_bridge::Message::Pose(p)) = env.msg {
                let g = gaze_drive_bridge::Message::Gaze(gaze_drive_bridge::GazeMsg {
                    x: p.x + 2.0,
                    y: p.y,
                    valid: true,
                    stamp: p.stamp,
                });
                if c.send(&Envelope::publish(topics::GAZE, g, p.stamp)).await.is_err() {
                    break;
                }
            }
        }
        frames
    });
    let mut o = opts(None, 400);
    o.speed = 20.0;
    let out = serve(cfg, l, o, std::future::pending()).await.unwrap();
    let frames = client.await.unwrap();
    assert!(frames > 10);
    assert!(out.stats.rejected > 0);
    assert_eq!(out.report.final_pose(), Some(start));
}

#[tokio::test(flavor = "multi_thread")]
async fn shutdown_future_stops_the_loop() {
    let out = serve(config(), listener().await, opts(None, u64::MAX), async {
        tokio::time::sleep(std::time::Duration::from_millis(100)).await;
    })
    .await
    .unwrap();
    assert!(out.ticks > 0);
}

#[tokio::test]
async fn negative_speed_is_rejected() {
    let mut o = opts(None, 10);
    o.speed = -1.0;
    let err = serve(config(), listener().await, o, std::future::pending()).await.unwrap_err();
    assert!(err.to_string().contains("speed"));
}
