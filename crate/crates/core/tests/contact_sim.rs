use coilbot::contact_sim::{contact_wrench, step_plant, CoilModel, HeadModel, PlantConfig, Twist};
use coilbot::geometry::{Frame, Pose, RotationMatrix3, Wrench};
use nalgebra::Vector3;
use proptest::prelude::*;

fn coil() -> CoilModel {
    CoilModel::new(100.0, 30f64.to_radians()).unwrap()
}

fn head() -> HeadModel {
    HeadModel::new(Pose::from_translation(Vector3::new(0.0, 0.0, 100.0), Frame::Head, Frame::Base), 90.0).unwrap()
}

/// Coil placed with its curvature center at distance `d` from the head
/// center, the head seen `phi` off the coil axis, plus a twist `psi` of
/// the whole arrangement about base z.
fn coil_pose(d: f64, phi: f64, psi: f64) -> Pose {
    let head_center = Vector3::new(0.0, 0.0, 100.0);
    let tilt = RotationMatrix3::from_axis_angle(&Vector3::y(), phi);
    let spin = RotationMatrix3::from_axis_angle(&Vector3::z(), psi);
    let rotation = spin.mul(&tilt);
    // curvature center = x_t + R_f * F1 sits `d` below the head center along -F1 rotated back by phi
    let dir_to_head = spin.rotate(&Vector3::new(0.0, 0.0, 1.0));
    let c_f = head_center - d * dir_to_head;
    let x_t = c_f - 100.0 * rotation.axis(2);
    Pose::new(rotation, x_t, Frame::Tool, Frame::Base)
}

proptest! {
    #[test]
    fn contact_invariants(
        d in 0.0..40.0f64,
        phi in -0.9..0.9f64,
        psi in -3.0..3.0f64,
        v in prop::array::uniform3(-20.0..20.0f64),
        w in prop::array::uniform3(-0.2..0.2f64),
    ) {
        let pose = coil_pose(d, phi, psi);
        let s = contact_wrench(&pose, &coil(), &head(), &Twist::new(Vector3::from(v), Vector3::from(w)));
        prop_assert_eq!(s.in_contact, s.penetration > 0.0);
        prop_assert!(s.normal_force >= 0.0);
        prop_assert!(s.friction_force.norm() <= head().friction * s.normal_force + 1e-9);
        if !s.in_contact {
            prop_assert_eq!(s.force_on_coil, Vector3::zeros());
            prop_assert_eq!(s.torque_on_coil, Vector3::zeros());
        }
    }

    #[test]
    fn plant_keeps_tool_z_stiff_and_friction_bounded(
        d in 10.0..14.0f64,
        phi in -0.3..0.3f64,
        f in prop::array::uniform3(-40.0..40.0f64),
        tau in prop::array::uniform3(-2000.0..2000.0f64),
    ) {
        let pose = coil_pose(d, phi, 0.3);
        let cmd = Wrench::new(Vector3::from(f), Vector3::from(tau));
        let step = step_plant(&pose, &cmd, &coil(), &head(), &Vector3::zeros(), &Vector3::zeros(), &PlantConfig::default());
        let z = pose.rotation.axis(2);
        prop_assert!(step.twist.angular.dot(&z).abs() < 1e-12);
        prop_assert!(step.contact.friction_force.norm() <= head().friction * step.contact.normal_force + 1e-9);
        prop_assert!(step.pose.translation.iter().all(|v| v.is_finite()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// With no command the damped plant only ever lets the coil back out.
    #[test]
    fn zero_command_never_deepens_penetration(d in 10.5..16.0f64, phi in -0.2..0.2f64) {
        let cfg = PlantConfig::default();
        let mut pose = coil_pose(d, phi, 0.0);
        let mut omega = Vector3::zeros();
        let mut last = f64::INFINITY;
        for _ in 0..2000 {
            let step = step_plant(&pose, &Wrench::zero(), &coil(), &head(), &Vector3::zeros(), &omega, &cfg);
            let depth = step.contact.penetration.max(0.0);
            prop_assert!(depth <= last + 1e-12, "penetration grew from {} to {}", last, depth);
            last = depth;
            pose = step.pose;
            omega = step.twist.angular;
        }
        prop_assert!(last < 1e-3);
    }
}
