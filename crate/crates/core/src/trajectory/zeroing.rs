//! Sensor zero adjustment: back off from the contact point, average the
//! free-space readings into the sensor's zero offset, then return.

use nalgebra::Vector3;

use super::phases::{KeyPoints, MotionLimits, Phase, PhasePlan, PlanSample};
use super::profile::plan_profile;
use crate::contact_sim::Sensor;
use crate::error::Result;
use crate::geometry::{Pose, Wrench};

pub const DEFAULT_RETREAT_MM: f64 = 5.0;
pub const DEFAULT_ZERO_READINGS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ZeroAdjustment {
    /// Pose the coil is returned to; equal to the contact pose.
    pub pose: Pose,
    pub retreat_pose: Pose,
    /// Mean free-space reading folded into the zero offset.
    pub captured: Wrench,
}

/// Pose `distance` mm back along the negative coil axis.
pub fn retreat_pose(contact_pose: &Pose, distance: f64) -> Pose {
    let mut p = *contact_pose;
    p.translation -= distance * contact_pose.rotation.axis(2);
    p
}

/// Zeroes `sensor` from `readings` samples taken at the retreat pose.
/// `truth` yields the true load at a pose (zero in free space).
pub fn phase4_zero_adjust<F>(
    contact_pose: &Pose,
    sensor: &mut Sensor,
    retreat_mm: f64,
    readings: usize,
    mut truth: F,
) -> ZeroAdjustment
where
    F: FnMut(&Pose) -> Wrench,
{
    let back = retreat_pose(contact_pose, retreat_mm);
    let load = truth(&back);
    let mut mean = [0.0; 6];
    for k in 0..readings.max(1) {
        let r = sensor.read(&load).to_array();
        for (m, v) in mean.iter_mut().zip(r) {
            *m += (v - *m) / (k + 1) as f64;
        }
    }
    let captured = Wrench::from_array(mean);
    sensor.absorb_zero(&captured);
    ZeroAdjustment { pose: *contact_pose, retreat_pose: back, captured }
}

/// Out-and-back straight move used to animate the zeroing phase; the coil
/// dwells at the retreat pose for `dwell` seconds.
pub fn plan_retreat(
    contact_pose: &Pose,
    retreat_mm: f64,
    dwell: f64,
    limits: &MotionLimits,
    dt: f64,
) -> Result<PhasePlan> {
    let profile = plan_profile(retreat_mm, limits.v_max, limits.accel)?;
    let axis: Vector3<f64> = contact_pose.rotation.axis(2);
    let leg = profile.t_total;
    let total = 2.0 * leg + dwell.max(0.0);
    let n = if total <= 0.0 { 0 } else { (total / dt - 1e-9).ceil() as usize };
    let samples = (0..=n)
        .map(|k| {
            let t = k as f64 * dt;
            let back = if t <= leg {
                profile.eval(t).0
            } else if t <= leg + dwell {
                retreat_mm
            } else {
                retreat_mm - profile.eval(t - leg - dwell).0
            };
            let mut pose = *contact_pose;
            if t < total {
                pose.translation -= back * axis;
            }
            PlanSample { t, pose }
        })
        .collect();
    Ok(PhasePlan {
        phase: Phase::Zeroing,
        dt,
        samples,
        key: KeyPoints { x_f: Some(contact_pose.translation), ..Default::default() },
    })
}
