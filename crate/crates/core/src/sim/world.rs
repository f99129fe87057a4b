use serde::{Deserialize, Serialize};

use super::pose::Pose;
use crate::error::{Error, Result};

/// Axis-aligned rectangle in world coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rect {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Rect {
    pub fn new(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Self {
        Self {
            min_x,
            min_y,
            max_x,
            max_y,
        }
    }

    pub fn centered(cx: f64, cy: f64, length: f64, width: f64) -> Self {
        Self::new(cx - length / 2.0, cy - width / 2.0, cx + length / 2.0, cy + width / 2.0)
    }

    pub fn is_well_formed(&self) -> bool {
        [self.min_x, self.min_y, self.max_x, self.max_y]
            .iter()
            .all(|v| v.is_finite())
            && self.min_x < self.max_x
            && self.min_y < self.max_y
    }

    /// Closed containment.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.min_x && x <= self.max_x && y >= self.min_y && y <= self.max_y
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        self.contains(other.min_x, other.min_y) && self.contains(other.max_x, other.max_y)
    }

    pub fn corners(&self) -> [(f64, f64); 4] {
        [
            (self.min_x, self.min_y),
            (self.max_x, self.min_y),
            (self.max_x, self.max_y),
            (self.min_x, self.max_y),
        ]
    }
}

/// The robot outline: a `length` x `width` rectangle centered on the pose and
/// aligned with its heading.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Footprint {
    pub length: f64,
    pub width: f64,
}

impl Footprint {
    pub fn corners_at(&self, pose: &Pose) -> [(f64, f64); 4] {
        let (s, c) = pose.theta.sin_cos();
        let hl = self.length / 2.0;
        let hw = self.width / 2.0;
        [(hl, hw), (-hl, hw), (-hl, -hw), (hl, -hw)].map(|(bx, by)| {
            (pose.x + c * bx - s * by, pose.y + s * bx + c * by)
        })
    }

    /// Open intersection with an axis-aligned rectangle: shared edges or
    /// corners with zero overlap area do not count.
    pub fn overlaps(&self, pose: &Pose, rect: &Rect) -> bool {
        let corners = self.corners_at(pose);
        let rect_corners = rect.corners();
        let (s, c) = pose.theta.sin_cos();
        let axes = [(1.0, 0.0), (0.0, 1.0), (c, s), (-s, c)];
        for (ax, ay) in axes {
            let (a_min, a_max) = project(&corners, ax, ay);
            let (b_min, b_max) = project(&rect_corners, ax, ay);
            if a_max <= b_min || b_max <= a_min {
                return false;
            }
        }
        true
    }

    pub fn inside(&self, pose: &Pose, bounds: &Rect) -> bool {
        self.corners_at(pose)
            .iter()
            .all(|&(x, y)| bounds.contains(x, y))
    }
}

fn project(points: &[(f64, f64); 4], ax: f64, ay: f64) -> (f64, f64) {
    points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(x, y)| {
        let p = x * ax + y * ay;
        (lo.min(p), hi.max(p))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldModel {
    pub bounds: Rect,
    pub obstacles: Vec<Rect>,
    pub start_pose: Pose,
    pub goal_region: Rect,
    /// Operator standing distance behind the robot at start, meters.
    pub operator_offset: f64,
}

impl WorldModel {
    pub fn validate(&self, footprint: &Footprint) -> Result<()> {
        if !self.bounds.is_well_formed() {
            return Err(Error::InvalidWorld("bounds rectangle is malformed".into()));
        }
        for (i, o) in self.obstacles.iter().enumerate() {
            if !o.is_well_formed() {
                return Err(Error::InvalidWorld(format!("obstacle {i} is malformed")));
            }
        }
        if !self.goal_region.is_well_formed() || !self.bounds.contains_rect(&self.goal_region) {
            return Err(Error::InvalidWorld("goal region must lie inside bounds".into()));
        }
        if !(self.operator_offset.is_finite() && self.operator_offset > 0.0) {
            return Err(Error::InvalidWorld(format!(
                "operator_offset must be > 0, got {}",
                self.operator_offset
            )));
        }
        if !self.start_pose.is_finite() {
            return Err(Error::InvalidWorld("start pose is not finite".into()));
        }
        if self.collides(&self.start_pose, footprint) {
            return Err(Error::InvalidWorld(
                "start pose is in collision or out of bounds".into(),
            ));
        }
        Ok(())
    }

    pub fn collides(&self, pose: &Pose, footprint: &Footprint) -> bool {
        !footprint.inside(pose, &self.bounds)
            || self.obstacles.iter().any(|o| footprint.overlaps(pose, o))
    }

    /// Where the operator starts: `operator_offset` behind the robot.
    pub fn operator_start(&self) -> (f64, f64) {
        let p = &self.start_pose;
        (
            p.x - self.operator_offset * p.theta.cos(),
            p.y - self.operator_offset * p.theta.sin(),
        )
    }
}

/// Stop-on-contact: a move that would overlap an obstacle or leave the bounds
/// is rejected and the robot stays at `old`.
pub fn resolve_collision(
    old: &Pose,
    new: &Pose,
    world: &WorldModel,
    footprint: &Footprint,
) -> (Pose, bool) {
    if world.collides(new, footprint) {
        (*old, true)
    } else {
        (*new, false)
    }
}
