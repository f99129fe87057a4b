//! Headless runner, damping sweeps, session replay and the live broker.

pub mod config;
pub mod live;
pub mod output;

use anyhow::{bail, Result};
use gaze_drive_core::sim::{run_episode, InputScript, SimConfig};

use output::SweepRow;

/// Process exit codes.
pub mod exit {
    pub const GOAL: u8 = 0;
    pub const ERROR: u8 = 1;
    pub const TIMEOUT: u8 = 2;
    pub const ORDERING: u8 = 3;
}

pub fn validate_dampings(list: &[f64]) -> Result<()> {
    if list.is_empty() {
        bail!("damping list is empty");
    }
    if let Some(bad) = list.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
        bail!("invalid parameter: damping must be a finite value > 0 N*s/m, got {bad}");
    }
    Ok(())
}

/// Outcome of a sweep. `error` is set if an episode failed; `rows` then
/// holds the episodes that completed before it.
#[derive(Debug)]
pub struct Sweep {
    pub rows: Vec<SweepRow>,
    pub error: Option<anyhow::Error>,
}

/// One episode per damping value on the same script, in list order.
pub fn sweep(cfg: &SimConfig, script: &InputScript, dampings: &[f64]) -> Result<Sweep> {
    validate_dampings(dampings)?;
    let mut rows = Vec::with_capacity(dampings.len());
    for &d in dampings {
        let mut c = cfg.clone();
        let result = c.params.set_damping(d).map_err(anyhow::Error::from).and_then(|_| {
            run_episode(&c, script).map_err(anyhow::Error::from)
        });
        match result {
            Ok(r) => rows.push(SweepRow {
                damping: d,
                time_to_goal: r.time_to_goal,
                path_length: r.path_length,
                collisions: r.collision_count,
            }),
            Err(e) => {
                return Ok(Sweep {
                    rows,
                    error: Some(e.context(format!("episode with damping {d}"))),
                })
            }
        }
    }
    Ok(Sweep { rows, error: None })
}
