//! Phase 1-3 approach trajectories around the guard sphere.

use std::io::Write;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::profile::plan_profile;
use crate::error::{Error, Result};
use crate::geometry::{Frame, Pose, RotationMatrix3};

/// Radial tolerance used to decide whether a point lies on the guard surface.
pub const SURFACE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Approach = 1,
    Arc = 2,
    Descent = 3,
    Zeroing = 4,
    /// Force/torque control, after the four planning phases.
    Force = 5,
}

impl Phase {
    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: u8) -> Option<Self> {
        Some(match id {
            1 => Phase::Approach,
            2 => Phase::Arc,
            3 => Phase::Descent,
            4 => Phase::Zeroing,
            5 => Phase::Force,
            _ => return None,
        })
    }
}

/// Virtual sphere the approach must not enter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereGuard {
    pub center: Vector3<f64>,
    pub radius: f64,
}

impl SphereGuard {
    /// Center raised `center_offset` along `up`, radius `head_radius + clearance`.
    pub fn around_head(
        head_center: Vector3<f64>,
        head_radius: f64,
        up: Vector3<f64>,
        center_offset: f64,
        clearance: f64,
    ) -> Result<Self> {
        let up = up.try_normalize(1e-12).ok_or_else(|| Error::invalid("guard up-vector must be non-zero"))?;
        let guard = SphereGuard { center: head_center + center_offset * up, radius: head_radius + clearance };
        if !(guard.radius > 0.0) {
            return Err(Error::invalid("guard radius must be positive"));
        }
        if guard.radius <= head_radius + center_offset.abs() {
            return Err(Error::invalid(format!(
                "guard radius {} does not contain the head (needs > {})",
                guard.radius,
                head_radius + center_offset.abs()
            )));
        }
        Ok(guard)
    }

    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        (p - self.center).norm() < self.radius - SURFACE_TOLERANCE
    }
}

/// Cartesian and angular limits shared by the planned phases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MotionLimits {
    /// mm/s
    pub v_max: f64,
    /// mm/s^2
    pub accel: f64,
    /// rad/s
    pub w_max: f64,
    /// rad/s^2
    pub alpha: f64,
}

impl Default for MotionLimits {
    fn default() -> Self {
        Self { v_max: 50.0, accel: 100.0, w_max: 0.5, alpha: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanSample {
    /// Seconds from the start of the phase.
    pub t: f64,
    pub pose: Pose,
}

/// Key points of the approach: initial position, guard entry and exit, target.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KeyPoints {
    pub x_i: Option<Vector3<f64>>,
    pub x_si: Option<Vector3<f64>>,
    pub x_sf: Option<Vector3<f64>>,
    pub x_f: Option<Vector3<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePlan {
    pub phase: Phase,
    pub dt: f64,
    pub samples: Vec<PlanSample>,
    pub key: KeyPoints,
}

impl PhasePlan {
    pub fn duration(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }

    pub fn last_pose(&self) -> Option<&Pose> {
        self.samples.last().map(|s| &s.pose)
    }

    pub fn is_null(&self) -> bool {
        self.samples.len() <= 1
    }

    /// Appends rows `t,x,y,z,qw,qx,qy,qz,phase` (no header), offsetting `t`.
    pub fn write_csv_rows<W: Write>(&self, out: &mut W, t_offset: f64) -> std::io::Result<()> {
        for s in &self.samples {
            let p = &s.pose.translation;
            let q = s.pose.quaternion_wxyz();
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                s.t + t_offset,
                p.x,
                p.y,
                p.z,
                q[0],
                q[1],
                q[2],
                q[3],
                self.phase.id()
            )?;
        }
        Ok(())
    }
}

pub const PLAN_CSV_HEADER: &str = "t,x,y,z,qw,qx,qy,qz,phase";

/// Writes several consecutive plans as one CSV, chaining their time axes.
pub fn write_plans_csv<W: Write>(plans: &[PhasePlan], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{PLAN_CSV_HEADER}")?;
    let mut offset = 0.0;
    for plan in plans {
        plan.write_csv_rows(&mut out, offset)?;
        offset += plan.duration() + plan.dt;
    }
    Ok(())
}

fn validate_dt(dt: f64) -> Result<()> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("dt must be positive, got {dt}")))
    }
}

/// Sample times `0, dt, 2dt, ...` up to the first one at or beyond `duration`.
fn sample_times(duration: f64, dt: f64) -> impl Iterator<Item = f64> {
    let n = if duration <= 0.0 { 0 } else { (duration / dt - 1e-9).ceil() as usize };
    (0..=n).map(move |k| k as f64 * dt)
}

fn tool_pose(rotation: RotationMatrix3, position: Vector3<f64>) -> Pose {
    Pose::new(rotation, position, Frame::Tool, Frame::Base)
}

/// Straight run from `x_start` to the guard surface along the ray toward the
/// guard center, turning the coil axis onto that ray.
pub fn plan_phase1(
    x_start: Vector3<f64>,
    start_orientation: RotationMatrix3,
    guard: &SphereGuard,
    limits: &MotionLimits,
    dt: f64,
) -> Result<PhasePlan> {
    validate_dt(dt)?;
    let offset = x_start - guard.center;
    let dist = offset.norm();
    if dist < guard.radius - SURFACE_TOLERANCE {
        return Err(Error::planning(format!(
            "start position is inside the guard sphere ({dist:.3} mm < {:.3} mm)",
            guard.radius
        )));
    }
    let outward = offset / dist;
    let on_surface = dist - guard.radius <= SURFACE_TOLERANCE;
    let x_si = if on_surface { x_start } else { guard.center + guard.radius * outward };
    let path = (x_si - x_start).norm();

    let approach_axis = -outward;
    let align = RotationMatrix3::rotation_between(&start_orientation.axis(2), &approach_axis);
    let end_orientation = align.mul(&start_orientation);
    let turn = start_orientation.angle_to(&end_orientation);

    let pos = plan_profile(path, limits.v_max, limits.accel)?;
    let rot = plan_profile(turn, limits.w_max, limits.alpha)?;
    let duration = pos.t_total.max(rot.t_total);

    let samples = sample_times(duration, dt)
        .map(|t| {
            let f = pos.fraction(t);
            let position = if f >= 1.0 { x_si } else { x_start + f * (x_si - x_start) };
            let g = rot.fraction(t);
            let rotation = if g >= 1.0 { end_orientation } else { start_orientation.slerp(&end_orientation, g) };
            PlanSample { t, pose: tool_pose(rotation, position) }
        })
        .collect();

    Ok(PhasePlan {
        phase: Phase::Approach,
        dt,
        samples,
        key: KeyPoints { x_i: Some(x_start), x_si: Some(x_si), ..Default::default() },
    })
}

/// Guard-surface intersection of the ray from the guard center through `x_f`.
pub fn guard_exit_point(guard: &SphereGuard, x_f: &Vector3<f64>) -> Result<Vector3<f64>> {
    let ray = (x_f - guard.center)
        .try_normalize(1e-9)
        .ok_or_else(|| Error::planning("target coincides with the guard center"))?;
    Ok(guard.center + guard.radius * ray)
}

/// Point at `fraction` of the minor great-circle arc between two guard-surface
/// points.
pub fn great_circle_point(
    guard: &SphereGuard,
    from: &Vector3<f64>,
    to: &Vector3<f64>,
    fraction: f64,
) -> Result<Vector3<f64>> {
    let a = (from - guard.center).normalize();
    let b = (to - guard.center).normalize();
    let cross = a.cross(&b);
    let alpha = cross.norm().atan2(a.dot(&b));
    if alpha < 1e-12 {
        return Ok(guard.center + guard.radius * a);
    }
    if cross.norm() < 1e-12 {
        return Err(Error::planning("antipodal arc endpoints"));
    }
    let turn = RotationMatrix3::from_axis_angle(&(cross / cross.norm()), fraction * alpha);
    Ok(guard.center + guard.radius * turn.rotate(&a))
}

/// Minor great-circle arc from `x_si` to the exit point above `x_f`, with the
/// coil axis aimed at the guard center throughout.
pub fn plan_phase2(
    x_si: Vector3<f64>,
    x_f: Vector3<f64>,
    guard: &SphereGuard,
    start_orientation: RotationMatrix3,
    limits: &MotionLimits,
    dt: f64,
) -> Result<PhasePlan> {
    validate_dt(dt)?;
    let r = guard.radius;
    let rel = x_si - guard.center;
    if (rel.norm() - r).abs() > SURFACE_TOLERANCE {
        return Err(Error::planning(format!(
            "arc start is not on the guard surface (|x - x_o| = {}, R = {r})",
            rel.norm()
        )));
    }
    let x_sf = guard_exit_point(guard, &x_f)?;
    let a = rel / rel.norm();
    let b = (x_sf - guard.center) / r;
    let cross = a.cross(&b);
    let alpha = cross.norm().atan2(a.dot(&b));

    let initial = {
        let align = RotationMatrix3::rotation_between(&start_orientation.axis(2), &(-a));
        align.mul(&start_orientation)
    };
    let key = KeyPoints { x_si: Some(x_si), x_sf: Some(x_sf), x_f: Some(x_f), ..Default::default() };

    if alpha < 1e-12 {
        return Ok(PhasePlan {
            phase: Phase::Arc,
            dt,
            samples: vec![PlanSample { t: 0.0, pose: tool_pose(initial, x_si) }],
            key,
        });
    }
    if std::f64::consts::PI - alpha < 1e-9 || cross.norm() < 1e-12 {
        return Err(Error::planning(
            "arc endpoints are antipodal; the great circle is not unique (perturb the start pose)",
        ));
    }
    let normal = cross / cross.norm();
    let profile = plan_profile(r * alpha, limits.v_max, limits.accel)?;

    // rotating about the great-circle normal transports both the position
    // and the coil frame with minimal twist
    let samples = sample_times(profile.t_total, dt)
        .map(|t| {
            let turn = RotationMatrix3::from_axis_angle(&normal, profile.fraction(t) * alpha);
            let position = guard.center + r * turn.rotate(&a);
            PlanSample { t, pose: tool_pose(turn.mul(&initial), position) }
        })
        .collect();

    Ok(PhasePlan { phase: Phase::Arc, dt, samples, key })
}

/// Constant-velocity straight descent from `x_sf` to `x_f` with the
/// orientation held.
pub fn plan_phase3(
    x_sf: Vector3<f64>,
    x_f: Vector3<f64>,
    guard: &SphereGuard,
    orientation: RotationMatrix3,
    velocity: f64,
    dt: f64,
) -> Result<PhasePlan> {
    validate_dt(dt)?;
    if !(velocity > 0.0 && velocity.is_finite()) {
        return Err(Error::invalid(format!("descent velocity must be positive, got {velocity}")));
    }
    let key = KeyPoints { x_sf: Some(x_sf), x_f: Some(x_f), ..Default::default() };
    let run = x_f - x_sf;
    let length = run.norm();
    if length < 1e-12 {
        return Ok(PhasePlan {
            phase: Phase::Descent,
            dt,
            samples: vec![PlanSample { t: 0.0, pose: tool_pose(orientation, x_sf) }],
            key,
        });
    }
    // x_f must lie on the inward ray x_sf -> x_o
    let inward = guard.center - x_sf;
    let inward_dir = inward / inward.norm();
    let dir = run / length;
    let off_line = (run - run.dot(&inward_dir) * inward_dir).norm();
    if dir.dot(&inward_dir) <= 0.0 || off_line > 1e-6 {
        return Err(Error::planning("target is not on the inward ray from the guard exit point"));
    }

    let duration = length / velocity;
    let samples = sample_times(duration, dt)
        .map(|t| {
            let position = if t >= duration { x_f } else { x_sf + (velocity * t) * dir };
            PlanSample { t, pose: tool_pose(orientation, position) }
        })
        .collect();
    Ok(PhasePlan { phase: Phase::Descent, dt, samples, key })
}

/// Contact is declared once the measured force norm exceeds `threshold`.
pub fn detect_contact(measured_force: &Vector3<f64>, threshold: f64) -> bool {
    measured_force.norm() > threshold
}
