//! Scripted head motion.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Pose;

/// Linear move of `distance_mm` along a head-frame `axis`, starting at
/// `start_s` and proceeding at `speed_mm_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ramp {
    pub axis: [f64; 3],
    pub distance_mm: f64,
    pub speed_mm_s: f64,
    pub start_s: f64,
}

impl Ramp {
    fn validate(&self) -> Result<()> {
        let axis = Vector3::from(self.axis);
        if !(axis.norm() > 1e-12) || axis.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("ramp axis must be a non-zero vector"));
        }
        if !(self.distance_mm >= 0.0 && self.distance_mm.is_finite()) {
            return Err(Error::config("ramp distance must be >= 0"));
        }
        if !(self.speed_mm_s > 0.0 && self.speed_mm_s.is_finite()) {
            return Err(Error::config("ramp speed must be > 0"));
        }
        if !self.start_s.is_finite() {
            return Err(Error::config("ramp start must be finite"));
        }
        Ok(())
    }

    fn unit_axis(&self) -> Vector3<f64> {
        Vector3::from(self.axis).normalize()
    }

    pub fn end_s(&self) -> f64 {
        self.start_s + self.distance_mm / self.speed_mm_s
    }

    fn displacement(&self, t: f64) -> Vector3<f64> {
        let travelled = ((t - self.start_s) * self.speed_mm_s).clamp(0.0, self.distance_mm);
        if t >= self.end_s() {
            return self.distance_mm * self.unit_axis();
        }
        travelled * self.unit_axis()
    }

    fn velocity(&self, t: f64) -> Vector3<f64> {
        if t >= self.start_s && t < self.end_s() {
            self.speed_mm_s * self.unit_axis()
        } else {
            Vector3::zeros()
        }
    }
}

/// Head motion scripts. Times are seconds since force control engaged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum HeadMotion {
    #[default]
    Fixed,
    Ramp(Ramp),
    /// Several ramps; displacements add up.
    Sequence {
        segments: Vec<Ramp>,
    },
}

impl HeadMotion {
    /// 7 mm along head x, then 7 mm along head y, both at 1 mm/s.
    pub fn tracking_default(start_s: f64) -> Self {
        let x = Ramp { axis: [1.0, 0.0, 0.0], distance_mm: 7.0, speed_mm_s: 1.0, start_s };
        let y = Ramp { axis: [0.0, 1.0, 0.0], distance_mm: 7.0, speed_mm_s: 1.0, start_s: x.end_s() };
        HeadMotion::Sequence { segments: vec![x, y] }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            HeadMotion::Fixed => Ok(()),
            HeadMotion::Ramp(r) => r.validate(),
            HeadMotion::Sequence { segments } => segments.iter().try_for_each(Ramp::validate),
        }
    }

    fn segments(&self) -> &[Ramp] {
        match self {
            HeadMotion::Fixed => &[],
            HeadMotion::Ramp(r) => std::slice::from_ref(r),
            HeadMotion::Sequence { segments } => segments,
        }
    }

    /// Head-frame displacement at `t`.
    pub fn displacement(&self, t: f64) -> Vector3<f64> {
        self.segments().iter().map(|r| r.displacement(t)).sum()
    }

    /// Head-frame velocity at `t` (mm/s).
    pub fn velocity(&self, t: f64) -> Vector3<f64> {
        self.segments().iter().map(|r| r.velocity(t)).sum()
    }

    pub fn is_moving(&self, t: f64) -> bool {
        self.velocity(t).norm() > 0.0
    }

    /// Interval during which any segment is active, if any.
    pub fn active_window(&self) -> Option<(f64, f64)> {
        let segs = self.segments();
        if segs.iter().all(|r| r.distance_mm == 0.0) {
            return None;
        }
        let start = segs.iter().map(|r| r.start_s).fold(f64::INFINITY, f64::min);
        let end = segs.iter().map(Ramp::end_s).fold(f64::NEG_INFINITY, f64::max);
        Some((start, end))
    }
}

/// Head pose at time `t`: the initial pose translated by the scripted
/// head-frame displacement.
pub fn head_motion_script(t: f64, script: &HeadMotion, initial: &Pose) -> Pose {
    let mut p = *initial;
    p.translation += initial.rotation.rotate(&script.displacement(t));
    p
}
