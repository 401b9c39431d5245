//! Trapezoidal velocity profile with the triangular fallback for short moves.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileShape {
    Trapezoid,
    /// Cruise speed never reached; peak velocity is `sqrt(s * a)`.
    Triangle,
    /// Zero-length move.
    Null,
}

/// Timing law for a scalar path of length `distance`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapezoidProfile {
    pub distance: f64,
    pub v_max: f64,
    pub accel: f64,
    /// Duration of the acceleration (and deceleration) ramp.
    pub t_accel: f64,
    pub t_total: f64,
    pub peak_velocity: f64,
    pub shape: ProfileShape,
}

/// Selects the trapezoid when `v_max^2 / a <= s`, otherwise the triangle.
pub fn plan_profile(distance: f64, v_max: f64, accel: f64) -> Result<TrapezoidProfile> {
    if !(v_max > 0.0 && v_max.is_finite()) {
        return Err(Error::invalid(format!("v_max must be positive, got {v_max}")));
    }
    if !(accel > 0.0 && accel.is_finite()) {
        return Err(Error::invalid(format!("acceleration must be positive, got {accel}")));
    }
    if !(distance >= 0.0 && distance.is_finite()) {
        return Err(Error::invalid(format!("distance must be >= 0, got {distance}")));
    }
    if distance == 0.0 {
        return Ok(TrapezoidProfile {
            distance,
            v_max,
            accel,
            t_accel: 0.0,
            t_total: 0.0,
            peak_velocity: 0.0,
            shape: ProfileShape::Null,
        });
    }
    if v_max * v_max / accel > distance {
        let t_accel = (distance / accel).sqrt();
        Ok(TrapezoidProfile {
            distance,
            v_max,
            accel,
            t_accel,
            t_total: 2.0 * t_accel,
            peak_velocity: (distance * accel).sqrt(),
            shape: ProfileShape::Triangle,
        })
    } else {
        let t_accel = v_max / accel;
        Ok(TrapezoidProfile {
            distance,
            v_max,
            accel,
            t_accel,
            t_total: distance / v_max + v_max / accel,
            peak_velocity: v_max,
            shape: ProfileShape::Trapezoid,
        })
    }
}

impl TrapezoidProfile {
    /// `(displacement, velocity)` at time `t`, clamped to `[0, t_total]`.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        if self.shape == ProfileShape::Null || t <= 0.0 {
            return (0.0, 0.0);
        }
        if t >= self.t_total {
            return (self.distance, 0.0);
        }
        let a = self.accel;
        let v = self.peak_velocity;
        let ta = self.t_accel;
        if t < ta {
            (0.5 * a * t * t, a * t)
        } else if t <= self.t_total - ta {
            (0.5 * a * ta * ta + v * (t - ta), v)
        } else {
            let rem = self.t_total - t;
            (self.distance - 0.5 * a * rem * rem, a * rem)
        }
    }

    /// Normalized progress in `[0, 1]`; a null profile is already complete.
    pub fn fraction(&self, t: f64) -> f64 {
        if self.shape == ProfileShape::Null {
            return 1.0;
        }
        (self.eval(t).0 / self.distance).clamp(0.0, 1.0)
    }
}

/// Same as [`TrapezoidProfile::eval`], as a free function.
pub fn eval_profile(p: &TrapezoidProfile, t: f64) -> (f64, f64) {
    p.eval(t)
}
