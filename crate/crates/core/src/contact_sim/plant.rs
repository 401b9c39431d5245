//! Quasi-static admittance plant for the coil.
//!
//! No inertia: the coil velocity is the net wrench divided by a damping,
//! `v = (F_cmd + F_contact) / D_t` and `w = (tau_cmd + tau_contact) / D_r`,
//! with the tool-z rotation held stiff. Contact damping and friction depend
//! on the velocity being solved for, so both are resolved implicitly for the
//! translational part; the rotational slip uses the previous step's angular
//! velocity.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::contact::{contact_geometry, CoilModel, ContactState, HeadModel, Twist};
use crate::error::{Error, Result};
use crate::geometry::{Pose, RotationMatrix3, Wrench};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantConfig {
    /// N*s/mm
    pub translational_damping: f64,
    /// N*mm*s/rad
    pub rotational_damping: f64,
    /// s
    pub dt: f64,
}

impl Default for PlantConfig {
    fn default() -> Self {
        Self { translational_damping: 4.0, rotational_damping: 100_000.0, dt: 0.002 }
    }
}

/// Compliance settings the damping constants are quoted for.
pub const NOMINAL_FORCE_GAIN: f64 = 1.0;
pub const NOMINAL_DAMPING: f64 = 0.1;

impl PlantConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.translational_damping > 0.0 && self.rotational_damping > 0.0) {
            return Err(Error::config("plant damping constants must be > 0"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config("plant dt must be > 0"));
        }
        Ok(())
    }

    /// Scales the damping constants for a compliance setting: damping
    /// proportional to the compliance damping parameter, inversely to the
    /// force gain. The nominal setting (gain 1.0, damping 0.1) leaves the
    /// constants unchanged.
    pub fn with_compliance(&self, force_gain: f64, damping: f64) -> Self {
        let scale = (damping / NOMINAL_DAMPING) * (NOMINAL_FORCE_GAIN / force_gain);
        Self {
            translational_damping: self.translational_damping * scale,
            rotational_damping: self.rotational_damping * scale,
            dt: self.dt,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantStep {
    pub pose: Pose,
    /// Coil twist used for the update, base frame.
    pub twist: Twist,
    /// Contact at the start of the step, with forces consistent with `twist`.
    pub contact: ContactState,
}

/// Advances the coil by one step under `command` (base frame, about `x_t`).
pub fn step_plant(
    pose: &Pose,
    command: &Wrench,
    coil: &CoilModel,
    head: &HeadModel,
    head_velocity: &Vector3<f64>,
    prev_angular: &Vector3<f64>,
    cfg: &PlantConfig,
) -> PlantStep {
    let d_t = cfg.translational_damping;
    let x_t = pose.translation;
    let g = contact_geometry(pose, coil, head);

    let (velocity, contact) = if !g.in_contact() {
        (command.force / d_t, ContactState::free(&g))
    } else {
        let n = g.normal;
        let slip_deep = prev_angular.cross(&(g.deepest_point - x_t)) - head_velocity;
        let slip_patch = prev_angular.cross(&(g.centroid - x_t)) - head_velocity;

        // normal: D v_n = G_n + F_n,  F_n = k delta - b (v_n + s_n)
        let g_n = command.force.dot(&n);
        let spring = head.stiffness * g.penetration;
        let b = head.damping;
        let s_n = slip_deep.dot(&n);
        let mut v_n = (g_n + spring - b * s_n) / (d_t + b);
        let mut f_n = spring - b * (v_n + s_n);
        if f_n < 0.0 {
            f_n = 0.0;
            v_n = g_n / d_t;
        }

        // tangential: D v_t = G_t + f,  f opposes the slip v_t + s_t
        let g_t = command.force - g_n * n;
        let s_t = slip_patch - slip_patch.dot(&n) * n;
        let h = g_t + d_t * s_t;
        let c_v = head.viscous_cap;
        let cap = head.friction * f_n;
        let friction = if c_v * h.norm() / (d_t + c_v) <= cap { -c_v * h / (d_t + c_v) } else { -cap * h / h.norm() };
        let v_t = (g_t + friction) / d_t;
        (v_n * n + v_t, ContactState::from_forces(&g, &x_t, f_n, friction))
    };

    let mut omega = (command.torque + contact.torque_on_coil) / cfg.rotational_damping;
    let tool_z = pose.rotation.axis(2);
    omega -= omega.dot(&tool_z) * tool_z;

    let rotation = RotationMatrix3::exp(&(omega * cfg.dt)).mul(&pose.rotation);
    let next = Pose::new(rotation, x_t + velocity * cfg.dt, pose.from, pose.to);
    PlantStep { pose: next, twist: Twist::new(velocity, omega), contact }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contact_sim::contact::contact_wrench;
    use crate::geometry::Frame;

    fn setup(head_center: Vector3<f64>) -> (Pose, CoilModel, HeadModel) {
        let pose = Pose::identity(Frame::Tool, Frame::Base);
        let coil = CoilModel::new(100.0, 30f64.to_radians()).unwrap();
        let head = HeadModel::new(Pose::from_translation(head_center, Frame::Head, Frame::Base), 90.0).unwrap();
        (pose, coil, head)
    }

    #[test]
    fn free_space_admittance() {
        let (pose, coil, head) = setup(Vector3::new(0.0, 0.0, 500.0));
        let cmd = Wrench::new(Vector3::new(0.0, 0.0, -10.0), Vector3::zeros());
        let step = step_plant(&pose, &cmd, &coil, &head, &Vector3::zeros(), &Vector3::zeros(), &PlantConfig::default());
        assert!((step.twist.linear - Vector3::new(0.0, 0.0, -2.5)).norm() < 1e-12);
        assert!((step.pose.translation - Vector3::new(0.0, 0.0, -0.005)).norm() < 1e-12);
    }

    #[test]
    fn zero_command_keeps_pose() {
        let (pose, coil, head) = setup(Vector3::new(0.0, 0.0, 500.0));
        let step = step_plant(
            &pose,
            &Wrench::zero(),
            &coil,
            &head,
            &Vector3::zeros(),
            &Vector3::zeros(),
            &PlantConfig::default(),
        );
        assert_eq!(step.pose, pose);
    }

    #[test]
    fn tool_z_rotation_is_stiff() {
        let (pose, coil, head) = setup(Vector3::new(0.0, 0.0, 500.0));
        let cmd = Wrench::new(Vector3::zeros(), Vector3::new(100.0, 0.0, 500.0));
        let step = step_plant(&pose, &cmd, &coil, &head, &Vector3::zeros(), &Vector3::zeros(), &PlantConfig::default());
        assert_eq!(step.twist.angular.z, 0.0);
        assert!(step.twist.angular.x > 0.0);
    }

    /// Fixed-point oracle: at equilibrium k_n * delta = F, so the reaction
    /// settles at the commanded magnitude.
    #[test]
    fn on_axis_push_reaches_equilibrium() {
        let (mut pose, coil, head) = setup(Vector3::new(0.0, 0.0, 90.0));
        let cfg = PlantConfig::default();
        let cmd = Wrench::new(Vector3::new(0.0, 0.0, 20.0), Vector3::zeros());
        let mut omega = Vector3::zeros();
        let mut fc = 0.0;
        for _ in 0..5000 {
            let step = step_plant(&pose, &cmd, &coil, &head, &Vector3::zeros(), &omega, &cfg);
            pose = step.pose;
            omega = step.twist.angular;
            fc = step.contact.force_magnitude();
        }
        assert!((fc - 20.0).abs() < 0.5, "F_c = {fc}");
        let s = contact_wrench(&pose, &coil, &head, &Twist::default());
        assert!((s.penetration - 2.0).abs() < 0.05);
    }

    #[test]
    fn penetration_decays_monotonically_without_command() {
        // start 3 mm deep, slightly off-axis
        let (mut pose, coil, head) = setup(Vector3::new(0.5, 0.0, 87.0));
        let cfg = PlantConfig::default();
        let mut omega = Vector3::zeros();
        let mut last = f64::INFINITY;
        for _ in 0..20_000 {
            let step = step_plant(&pose, &Wrench::zero(), &coil, &head, &Vector3::zeros(), &omega, &cfg);
            let depth = step.contact.penetration.max(0.0);
            assert!(depth <= last + 1e-12, "bounce: {depth} > {last}");
            last = depth;
            pose = step.pose;
            omega = step.twist.angular;
        }
        assert!(last < 1e-3, "residual penetration {last}");
    }

    #[test]
    fn compliance_mapping() {
        let nominal = PlantConfig::default();
        assert_eq!(nominal.with_compliance(1.0, 0.1), nominal);
        let stiffer = nominal.with_compliance(1.0, 0.2);
        assert!((stiffer.translational_damping - 8.0).abs() < 1e-12);
    }
}
