use std::f64::consts::FRAC_PI_2;

use armtwin_core::kinematics::{
    compose, fk_full, fk_position, ik_solve, link_transforms, rot_x, rot_y, rot_z, roundtrip_validate,
    translate, Angle, JointAngles, LinkLengths, RoundtripStatus, ToolPosition,
};
use proptest::prelude::*;

/// Planar pitch accumulation, written independently of the matrix chain:
/// each pitch link advances by `(sin S, cos S) * a` in the arm plane, where `S`
/// is the running pitch sum, and the plane is then yawed by theta1.
fn pitch_oracle(deg: [f64; 5], l: &LinkLengths) -> (f64, f64, f64) {
    let r = deg.map(f64::to_radians);
    let mut pitch = r[1];
    let mut radial = l.a2() * pitch.sin();
    let mut z = l.a1() + l.a2() * pitch.cos();
    pitch += FRAC_PI_2 + r[2];
    radial += l.a3() * pitch.sin();
    z += l.a3() * pitch.cos();
    pitch += r[3];
    radial += l.a4() * pitch.sin();
    z += l.a4() * pitch.cos();
    (radial * r[0].cos(), radial * r[0].sin(), z)
}

fn joint_degrees() -> impl Strategy<Value = [f64; 5]> {
    [
        -180.0..180.0f64,
        -90.0..90.0f64,
        -90.0..90.0f64,
        -90.0..90.0f64,
        0.0..90.0f64,
    ]
}

#[test]
fn fk_matches_pitch_oracle_on_golden_pose() {
    let l = LinkLengths::default();
    // Exact solution angles for (250, 0, 150), frozen from the oracle.
    let golden = [0.0, -8.0525, 27.4892, -19.4368, 0.0];
    let (ox, oy, oz) = pitch_oracle(golden, &l);
    assert!((ox - 250.0).abs() < 0.01 && oy.abs() < 1e-9 && (oz - 150.0).abs() < 0.01);

    let p = fk_position(&JointAngles::from_degrees(golden), &l);
    assert!((p.x - 250.0).abs() < 0.01, "{p}");
    assert!(p.y.abs() < 0.01, "{p}");
    assert!((p.z - 150.0).abs() < 0.01, "{p}");

    // Same pose quoted with three-decimal angles; rounding costs about 0.013 mm.
    let quoted = fk_position(&JointAngles::from_degrees([0.0, -8.053, 27.494, -19.441, 0.0]), &l);
    assert!(quoted.distance(&ToolPosition::new(250.0, 0.0, 150.0)) < 0.02, "{quoted}");
}

#[test]
fn ik_matches_grid_oracle_on_golden_target() {
    // Grid search over (theta2, theta3) at 0.01 deg, run offline: (-8.05, 27.49).
    let sol = ik_solve(&ToolPosition::new(250.0, 0.0, 150.0), Angle::ZERO, &LinkLengths::default()).unwrap();
    let d = sol.angles.degrees();
    for (got, want) in d.iter().zip([0.0, -8.05, 27.49, -19.44, 0.0]) {
        assert!((got - want).abs() < 0.01, "{d:?}");
    }
    assert!((sol.intermediates.w - 140.0).abs() < 1e-12);
    assert!((sol.intermediates.k - 27169f64.sqrt()).abs() < 1e-12);
}

#[test]
fn unreachable_distance_arithmetic() {
    let w = 500.0 - 110.0;
    let h = 208.0 - 63.0;
    let k: f64 = f64::hypot(w, h);
    assert!((k - 416.08).abs() < 0.01 && k > 315.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn fk_agrees_with_pitch_oracle(deg in joint_degrees()) {
        let l = LinkLengths::default();
        let p = fk_position(&JointAngles::from_degrees(deg), &l);
        let (x, y, z) = pitch_oracle(deg, &l);
        prop_assert!((p.x - x).abs() < 1e-9 && (p.y - y).abs() < 1e-9 && (p.z - z).abs() < 1e-9);
    }

    #[test]
    fn every_transform_stays_homogeneous(deg in joint_degrees(), ax in -7.0..7.0f64, d in -500.0..500.0f64) {
        let l = LinkLengths::default();
        let angles = JointAngles::from_degrees(deg);
        let mut all: Vec<_> = link_transforms(&angles, &l).to_vec();
        all.push(fk_full(&angles, &l).0);
        all.push(compose(&rot_x(Angle(ax)), &compose(&rot_y(Angle(-ax)), &rot_z(Angle(2.0 * ax)))));
        all.push(compose(&translate(d, -d, d), &rot_x(Angle(ax))));
        for t in &all {
            prop_assert!(t.has_homogeneous_bottom_row());
            prop_assert!(t.orthonormality_error() < 1e-9);
        }
    }

    #[test]
    fn roundtrip_recovers_position(deg in joint_degrees()) {
        let l = LinkLengths::default();
        let report = roundtrip_validate(&JointAngles::from_degrees(deg), &l, 1e-6);
        prop_assert!(report.status != RoundtripStatus::Fail, "{report:?}");
        if let Some(e) = report.error {
            prop_assert!(e < 1e-6);
        }
    }

    #[test]
    fn ik_keeps_last_link_level(x in -425.0..425.0f64, y in -425.0..425.0f64, z in -150.0..380.0f64) {
        let l = LinkLengths::default();
        if let Ok(sol) = ik_solve(&ToolPosition::new(x, y, z), Angle::ZERO, &l) {
            let [_, t2, t3, t4, _] = sol.angles.radians();
            prop_assert_eq!(t4, -t2 - t3);
            let (m, _) = fk_full(&sol.angles, &l);
            prop_assert!(m.z_axis()[2].abs() < 1e-9);
            prop_assert!(sol.intermediates.w >= 0.0);
            let k = sol.intermediates.k;
            prop_assert!(k <= l.a2() + l.a3() + 1e-9 && k >= (l.a2() - l.a3()).abs() - 1e-9);
        }
    }

    #[test]
    fn gripper_never_moves_the_tool(deg in joint_degrees(), g in -3.2..3.2f64) {
        let l = LinkLengths::default();
        let a = JointAngles::from_degrees(deg);
        let mut b = a;
        b.0[4] = Angle(g);
        let (pa, pb) = (fk_position(&a, &l), fk_position(&b, &l));
        prop_assert_eq!(pa.x.to_bits(), pb.x.to_bits());
        prop_assert_eq!(pa.y.to_bits(), pb.y.to_bits());
        prop_assert_eq!(pa.z.to_bits(), pb.z.to_bits());
    }

    #[test]
    fn base_yaw_is_equivariant(deg in joint_degrees(), delta in -3.0..3.0f64) {
        let l = LinkLengths::default();
        let a = JointAngles::from_degrees(deg);
        let mut b = a;
        b.0[0] = a.0[0] + Angle(delta);
        let rotated = rot_z(Angle(delta)).apply(&fk_position(&a, &l));
        prop_assert!(fk_position(&b, &l).distance(&rotated) < 1e-9);
    }
}
