//! Report files and tables.
//!
//! `report.json` holds the episode metrics; `trace.csv` has one row per tick
//! with columns `t,x,y,theta,fx,fy,vx,vy` in s, m, m, rad, N, N, m/s, m/s.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use anyhow::{Context, Result};
use gaze_drive_core::sim::EpisodeReport;
use serde::{Deserialize, Serialize};

pub const REPORT_FILE: &str = "report.json";
pub const TRACE_FILE: &str = "trace.csv";
pub const SWEEP_FILE: &str = "sweep.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalPose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub schema_version: u32,
    pub damping_ns_per_m: f64,
    pub reached_goal: bool,
    pub time_to_goal_s: Option<f64>,
    pub collision_count: u32,
    pub path_length_m: f64,
    pub duration_s: f64,
    pub max_speed_mps: f64,
    pub samples: usize,
    pub final_pose: Option<FinalPose>,
}

impl ReportFile {
    pub fn new(report: &EpisodeReport, damping: f64) -> Self {
        Self {
            schema_version: 1,
            damping_ns_per_m: damping,
            reached_goal: report.time_to_goal.is_some(),
            time_to_goal_s: report.time_to_goal,
            collision_count: report.collision_count,
            path_length_m: report.path_length,
            duration_s: report.duration(),
            max_speed_mps: max_speed(report),
            samples: report.trace.len(),
            final_pose: report.final_pose().map(|p| FinalPose {
                x: p.x,
                y: p.y,
                theta: p.theta,
            }),
        }
    }

    pub fn summary(&self) -> String {
        let tail = format!(
            "(D={} N*s/m, path {:.3} m, {} collision(s), max speed {:.3} m/s)",
            self.damping_ns_per_m, self.path_length_m, self.collision_count, self.max_speed_mps
        );
        match self.time_to_goal_s {
            Some(t) => format!("goal reached in {t:.2} s {tail}"),
            None => format!("timeout after {:.2} s {tail}", self.duration_s),
        }
    }
}

/// Largest per-axis linear speed over the trace.
pub fn max_speed(report: &EpisodeReport) -> f64 {
    report
        .trace
        .iter()
        .map(|s| s.velocity.linear_inf_norm())
        .fold(0.0, f64::max)
}

pub fn write_outputs(dir: &Path, report: &EpisodeReport, file: &ReportFile) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("{}: cannot create output directory", dir.display()))?;
    let path = dir.join(REPORT_FILE);
    let json = serde_json::to_string_pretty(file)?;
    fs::write(&path, json + "\n").with_context(|| format!("{}", path.display()))?;
    let path = dir.join(TRACE_FILE);
    let out = BufWriter::new(File::create(&path).with_context(|| format!("{}", path.display()))?);
    report
        .write_trace_csv(out)
        .with_context(|| format!("{}", path.display()))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub damping: f64,
    pub time_to_goal: Option<f64>,
    pub path_length: f64,
    pub collisions: u32,
}

pub fn sweep_csv(rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record(["damping", "time_to_goal", "path_length", "collisions"])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// Time to goal strictly increases with row order. A missing time counts as
/// infinite, so two timeouts violate the ordering.
pub fn strictly_increasing(rows: &[SweepRow]) -> bool {
    rows.windows(2).all(|w| {
        let a = w[0].time_to_goal.unwrap_or(f64::INFINITY);
        let b = w[1].time_to_goal.unwrap_or(f64::INFINITY);
        a < b
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(d: f64, t: Option<f64>) -> SweepRow {
        SweepRow {
            damping: d,
            time_to_goal: t,
            path_length: 1.0,
            collisions: 0,
        }
    }

    #[test]
    fn ordering() {
        assert!(strictly_increasing(&[]));
        assert!(strictly_increasing(&[row(20.0, None)]));
        assert!(strictly_increasing(&[row(10.0, Some(1.0)), row(20.0, Some(2.0)), row(30.0, None)]));
        assert!(!strictly_increasing(&[row(10.0, Some(2.0)), row(20.0, Some(2.0))]));
        assert!(!strictly_increasing(&[row(10.0, None), row(20.0, None)]));
    }

    #[test]
    fn csv_layout() {
        let text = sweep_csv(&[row(10.0, Some(43.5)), row(30.0, None)]).unwrap();
        assert_eq!(
            text,
            "damping,time_to_goal,path_length,collisions\n10.0,43.5,1.0,0\n30.0,,1.0,0\n"
        );
        assert_eq!(sweep_csv(&[]).unwrap(), "damping,time_to_goal,path_length,collisions\n");
    }
}
