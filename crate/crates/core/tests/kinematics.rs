use gaze_drive_core::kinematics::*;
use proptest::prelude::*;
use std::f64::consts::FRAC_PI_2;

fn geometry() -> impl Strategy<Value = RobotGeometry> {
    (0.02..0.5f64, 0.1..(FRAC_PI_2 - 0.1), 0.05..1.0f64, 0.05..1.0f64)
        .prop_map(|(r, a, d1, d2)| RobotGeometry::new(r, a, d1, d2).unwrap())
}

fn twist() -> impl Strategy<Value = BodyVelocity> {
    (-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64).prop_map(|(x, y, w)| BodyVelocity::new(x, y, w))
}

fn max_diff(a: &BodyVelocity, b: &BodyVelocity) -> f64 {
    (a.vx - b.vx).abs().max((a.vy - b.vy).abs()).max((a.omega - b.omega).abs())
}

/// Per-wheel rollers at +-alpha: FL and RR share one sign pattern, FR and RL
/// the other.
fn wheel_oracle(v: &BodyVelocity, g: &RobotGeometry) -> [f64; 4] {
    let c = 1.0 / g.roller_angle.tan();
    let k = g.d1 + g.d2 * c;
    let lat = [-c, c, -c, c];
    let yaw = [k, -k, -k, k];
    [0, 1, 2, 3].map(|i| (v.vx + lat[i] * v.vy + yaw[i] * v.omega) / g.wheel_radius)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn forward_inverts_inverse(g in geometry(), v in twist()) {
        let w = inverse_kinematics(&v, &g).unwrap();
        let back = forward_kinematics(&w, &g).unwrap();
        prop_assert!(max_diff(&back, &v) < 1e-9, "{v:?} -> {back:?}");
    }

    #[test]
    fn inverse_matches_per_wheel_formula(g in geometry(), v in twist()) {
        let w = inverse_kinematics(&v, &g).unwrap();
        let o = wheel_oracle(&v, &g);
        for i in 0..4 {
            prop_assert!((w.w[i] - o[i]).abs() <= 1e-9 * (1.0 + o[i].abs()));
        }
    }

    #[test]
    fn inverse_is_linear(g in geometry(), a in twist(), b in twist(), s in -4.0..4.0f64) {
        let sum = BodyVelocity::new(s * a.vx + b.vx, s * a.vy + b.vy, s * a.omega + b.omega);
        let lhs = inverse_kinematics(&sum, &g).unwrap();
        let wa = inverse_kinematics(&a, &g).unwrap();
        let wb = inverse_kinematics(&b, &g).unwrap();
        for i in 0..4 {
            let rhs = s * wa.w[i] + wb.w[i];
            prop_assert!((lhs.w[i] - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
        }
    }

    #[test]
    fn consistency_report_holds_for_any_geometry(g in geometry()) {
        let r = kinematic_consistency_report(&g).unwrap();
        prop_assert!(r.passed);
        prop_assert!(r.uncorrected_is_neg_r_identity(1e-9));
    }
}

#[test]
fn pure_translation_spins_all_wheels_equally() {
    let g = RobotGeometry::default();
    let w = inverse_kinematics(&BodyVelocity::new(0.5, 0.0, 0.0), &g).unwrap();
    for wi in w.w {
        assert!((wi - 0.5 / g.wheel_radius).abs() < 1e-12);
    }
}

#[test]
fn invalid_geometry_is_rejected() {
    assert!(RobotGeometry::new(0.0, 0.7, 0.2, 0.2).is_err());
    assert!(RobotGeometry::new(0.1, FRAC_PI_2, 0.2, 0.2).is_err());
    assert!(RobotGeometry::new(0.1, 0.7, f64::NAN, 0.2).is_err());
    let g = RobotGeometry::default();
    assert!(inverse_kinematics(&BodyVelocity::new(f64::INFINITY, 0.0, 0.0), &g).is_err());
    assert!(forward_kinematics(&WheelSpeeds::new(0.0, f64::NAN, 0.0, 0.0), &g).is_err());
}
