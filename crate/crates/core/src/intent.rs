//! Gaze-to-force conversion.
//!
//! The gaze point is expressed in the robot frame and classified against a
//! dead-zone rectangle centered on the robot plus four directional squares.
//! Gaze in the dead-zone produces no force. Gaze in the Up/Down squares
//! produces a purely longitudinal force, Left/Right a purely lateral one, each
//! `K` times the gaze offset along that axis.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::RobotGeometry;
use crate::sim::Pose;

/// Gaze samples older than this (seconds) stop holding the last force.
pub const DEFAULT_HOLD_TIMEOUT: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GazeSample {
    pub timestamp: f64,
    pub x: f64,
    pub y: f64,
    pub valid: bool,
}

impl GazeSample {
    pub fn new(timestamp: f64, x: f64, y: f64) -> Self {
        Self {
            timestamp,
            x,
            y,
            valid: true,
        }
    }

    pub fn invalid(timestamp: f64) -> Self {
        Self {
            timestamp,
            x: 0.0,
            y: 0.0,
            valid: false,
        }
    }

    fn usable(&self) -> bool {
        self.valid && self.x.is_finite() && self.y.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntentLayout {
    pub deadzone_length: f64,
    pub deadzone_width: f64,
    /// Reach of the directional squares beyond the dead-zone edge.
    pub region_extent: f64,
}

impl Default for IntentLayout {
    fn default() -> Self {
        let g = RobotGeometry::default();
        Self {
            deadzone_length: g.footprint_length,
            deadzone_width: g.footprint_width,
            region_extent: 2.0,
        }
    }
}

impl IntentLayout {
    pub fn validate(&self, geom: &RobotGeometry) -> Result<()> {
        if !(self.region_extent.is_finite() && self.region_extent > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "region_extent must be > 0, got {}",
                self.region_extent
            )));
        }
        if !(self.deadzone_length.is_finite() && self.deadzone_length >= geom.footprint_length) {
            return Err(Error::InvalidParameter(format!(
                "deadzone_length {} is smaller than the footprint length {}",
                self.deadzone_length, geom.footprint_length
            )));
        }
        if !(self.deadzone_width.is_finite() && self.deadzone_width >= geom.footprint_width) {
            return Err(Error::InvalidParameter(format!(
                "deadzone_width {} is smaller than the footprint width {}",
                self.deadzone_width, geom.footprint_width
            )));
        }
        Ok(())
    }

    fn half_length(&self) -> f64 {
        self.deadzone_length / 2.0
    }

    fn half_width(&self) -> f64 {
        self.deadzone_width / 2.0
    }
}

/// How the displacement outside the dead-zone is measured.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForceMode {
    /// Full gaze-to-robot-center offset. Jumps at the dead-zone edge.
    #[default]
    CenterReferenced,
    /// Offset measured from the dead-zone edge, continuous at the boundary.
    BoundaryRelative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IntentRegion {
    DeadZone,
    Up,
    Down,
    Left,
    Right,
    Outside,
}

/// Robot-frame force. At most one component is nonzero.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct VirtualForce {
    pub fx: f64,
    pub fy: f64,
}

impl VirtualForce {
    pub const ZERO: Self = Self { fx: 0.0, fy: 0.0 };

    pub fn new(fx: f64, fy: f64) -> Self {
        Self { fx, fy }
    }

    pub fn is_zero(&self) -> bool {
        self.fx == 0.0 && self.fy == 0.0
    }
}

/// Everything the intent stage needs besides stiffness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntentConfig {
    pub layout: IntentLayout,
    pub force_mode: ForceMode,
    pub hold_timeout: f64,
}

impl Default for IntentConfig {
    fn default() -> Self {
        Self::new(IntentLayout::default())
    }
}

impl IntentConfig {
    pub fn new(layout: IntentLayout) -> Self {
        Self {
            layout,
            force_mode: ForceMode::CenterReferenced,
            hold_timeout: DEFAULT_HOLD_TIMEOUT,
        }
    }
}

/// Classify a robot-frame offset. Corners where both axes are beyond the
/// dead-zone resolve to the longitudinal squares.
pub fn classify_body(lx: f64, ly: f64, layout: &IntentLayout) -> IntentRegion {
    let ex = lx.abs() - layout.half_length();
    let ey = ly.abs() - layout.half_width();
    let reach = layout.region_extent;
    if ex <= 0.0 && ey <= 0.0 {
        IntentRegion::DeadZone
    } else if ex > 0.0 && ex <= reach && ey <= reach {
        if lx > 0.0 {
            IntentRegion::Up
        } else {
            IntentRegion::Down
        }
    } else if ey > 0.0 && ey <= reach && ex <= 0.0 {
        if ly > 0.0 {
            IntentRegion::Left
        } else {
            IntentRegion::Right
        }
    } else {
        IntentRegion::Outside
    }
}

pub fn classify_region(g: &GazeSample, robot: &Pose, layout: &IntentLayout) -> Result<IntentRegion> {
    if !g.usable() {
        return Err(Error::NoClassification);
    }
    let (lx, ly) = robot.world_to_body(g.x, g.y);
    Ok(classify_body(lx, ly, layout))
}

/// Center-referenced force, the default law.
pub fn compute_force(
    g: &GazeSample,
    robot: &Pose,
    stiffness: f64,
    layout: &IntentLayout,
) -> Result<VirtualForce> {
    compute_force_with_mode(g, robot, stiffness, layout, ForceMode::CenterReferenced)
}

pub fn compute_force_with_mode(
    g: &GazeSample,
    robot: &Pose,
    stiffness: f64,
    layout: &IntentLayout,
    mode: ForceMode,
) -> Result<VirtualForce> {
    if !(stiffness.is_finite() && stiffness > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "stiffness must be > 0, got {stiffness}"
        )));
    }
    if !g.usable() {
        return Ok(VirtualForce::ZERO);
    }
    let (lx, ly) = robot.world_to_body(g.x, g.y);
    let force = match classify_body(lx, ly, layout) {
        IntentRegion::DeadZone | IntentRegion::Outside => VirtualForce::ZERO,
        IntentRegion::Up | IntentRegion::Down => {
            let d = match mode {
                ForceMode::CenterReferenced => lx,
                ForceMode::BoundaryRelative => lx - layout.half_length().copysign(lx),
            };
            VirtualForce::new(stiffness * d, 0.0)
        }
        IntentRegion::Left | IntentRegion::Right => {
            let d = match mode {
                ForceMode::CenterReferenced => ly,
                ForceMode::BoundaryRelative => ly - layout.half_width().copysign(ly),
            };
            VirtualForce::new(0.0, stiffness * d)
        }
    };
    Ok(force)
}

/// Hold the last force across gaze dropouts for at most `timeout` seconds.
pub fn hold_policy(last: VirtualForce, age: f64, timeout: f64) -> VirtualForce {
    if age <= timeout {
        last
    } else {
        VirtualForce::ZERO
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout() -> IntentLayout {
        IntentLayout::default()
    }

    #[test]
    fn center_is_deadzone() {
        let pose = Pose::new(3.0, -1.0, 0.4);
        let g = GazeSample::new(0.0, 3.0, -1.0);
        assert_eq!(
            classify_region(&g, &pose, &layout()).unwrap(),
            IntentRegion::DeadZone
        );
    }

    #[test]
    fn just_beyond_front_edge_is_up() {
        let l = layout();
        let pose = Pose::new(2.0, 1.0, 0.0);
        let g = GazeSample::new(0.0, 2.0 + l.deadzone_length / 2.0 + 0.1, 1.0);
        assert_eq!(classify_region(&g, &pose, &l).unwrap(), IntentRegion::Up);
    }

    #[test]
    fn far_point_is_outside() {
        let l = IntentLayout {
            region_extent: 1.0,
            ..layout()
        };
        let pose = Pose::new(2.0, 1.0, 0.0);
        let g = GazeSample::new(0.0, 102.0, 1.0);
        assert_eq!(classify_region(&g, &pose, &l).unwrap(), IntentRegion::Outside);
    }

    #[test]
    fn corner_resolves_longitudinally() {
        let l = layout();
        let pose = Pose::default();
        let g = GazeSample::new(0.0, l.deadzone_length / 2.0 + 0.5, -(l.deadzone_width / 2.0 + 0.5));
        assert_eq!(classify_region(&g, &pose, &l).unwrap(), IntentRegion::Up);
        let g = GazeSample::new(0.0, -0.1, -(l.deadzone_width / 2.0 + 0.5));
        assert_eq!(classify_region(&g, &pose, &l).unwrap(), IntentRegion::Right);
    }

    #[test]
    fn invalid_sample_has_no_classification() {
        let g = GazeSample::invalid(1.0);
        assert_eq!(
            classify_region(&g, &Pose::default(), &layout()),
            Err(Error::NoClassification)
        );
        assert_eq!(
            compute_force(&g, &Pose::default(), 10.0, &layout()).unwrap(),
            VirtualForce::ZERO
        );
    }

    #[test]
    fn force_in_deadzone_is_zero() {
        let g = GazeSample::new(0.0, 0.2, -0.1);
        let f = compute_force(&g, &Pose::default(), 10.0, &layout()).unwrap();
        assert_eq!(f, VirtualForce::ZERO);
    }

    #[test]
    fn force_up_one_meter() {
        let g = GazeSample::new(0.0, 1.0, 0.0);
        let f = compute_force(&g, &Pose::default(), 10.0, &layout()).unwrap();
        assert_eq!(f, VirtualForce::new(10.0, 0.0));
    }

    #[test]
    fn force_left_point_eight() {
        let g = GazeSample::new(0.0, 0.0, 0.8);
        let f = compute_force(&g, &Pose::default(), 10.0, &layout()).unwrap();
        assert_eq!(f, VirtualForce::new(0.0, 8.0));
    }

    #[test]
    fn force_in_rotated_frame() {
        // robot facing +y: a world point 1 m ahead is at (0, 1)
        let pose = Pose::new(0.0, 0.0, std::f64::consts::FRAC_PI_2);
        let g = GazeSample::new(0.0, 0.0, 1.0);
        let f = compute_force(&g, &pose, 10.0, &layout()).unwrap();
        assert!((f.fx - 10.0).abs() < 1e-12);
        assert_eq!(f.fy, 0.0);
    }

    #[test]
    fn boundary_relative_is_continuous() {
        let l = layout();
        let edge = l.deadzone_length / 2.0;
        let g = GazeSample::new(0.0, edge + 1e-9, 0.0);
        let f = compute_force_with_mode(&g, &Pose::default(), 10.0, &l, ForceMode::BoundaryRelative)
            .unwrap();
        assert!(f.fx > 0.0 && f.fx < 1e-7);
        let g = GazeSample::new(0.0, 0.0, -(l.deadzone_width / 2.0 + 0.5));
        let f = compute_force_with_mode(&g, &Pose::default(), 10.0, &l, ForceMode::BoundaryRelative)
            .unwrap();
        assert!((f.fy + 5.0).abs() < 1e-12);
    }

    #[test]
    fn nonpositive_stiffness_rejected() {
        let g = GazeSample::new(0.0, 1.0, 0.0);
        for k in [0.0, -1.0, f64::NAN] {
            assert!(matches!(
                compute_force(&g, &Pose::default(), k, &layout()),
                Err(Error::InvalidParameter(_))
            ));
        }
    }

    #[test]
    fn hold_policy_window() {
        let last = VirtualForce::new(10.0, 0.0);
        assert_eq!(hold_policy(last, 0.05, 0.1), last);
        assert_eq!(hold_policy(last, 0.2, 0.1), VirtualForce::ZERO);
        assert_eq!(hold_policy(VirtualForce::ZERO, 0.05, 0.1), VirtualForce::ZERO);
        assert_eq!(hold_policy(VirtualForce::ZERO, 5.0, 0.1), VirtualForce::ZERO);
    }

    #[test]
    fn layout_smaller_than_footprint_rejected() {
        let l = IntentLayout {
            deadzone_length: 0.5,
            ..layout()
        };
        assert!(l.validate(&RobotGeometry::default()).is_err());
        assert!(layout().validate(&RobotGeometry::default()).is_ok());
    }
}
