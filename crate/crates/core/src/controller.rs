//! Hybrid position/force control with a scheduled force magnitude and
//! proportional torque centering.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this error (mm) the coil is considered on target.
pub const TARGET_EPS: f64 = 1e-9;
/// Rejection norm below which the error is treated as parallel to F1.
pub const PARALLEL_EPS: f64 = 1e-9;

/// Direction convention for the error vector F2 is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum F2Sign {
    /// `u = (x_f - x_t) / |x_f - x_t|`
    #[default]
    Target,
    /// `u = (x_t - x_f) / |x_t - x_f|`
    Printed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridForceCommand {
    pub f1: Vector3<f64>,
    pub f2: Option<Vector3<f64>>,
    /// rad, in [0, pi]
    pub theta: f64,
    /// Scheduled magnitude F, N.
    pub magnitude: f64,
    /// Commanded force, N.
    pub force: Vector3<f64>,
}

fn check_unit(f1: &Vector3<f64>) -> Result<()> {
    if (f1.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("F1 must be a unit vector (norm {})", f1.norm())));
    }
    Ok(())
}

/// F2 and theta for the default sign convention.
pub fn compute_f2(x_t: &Vector3<f64>, x_f: &Vector3<f64>, f1: &Vector3<f64>) -> Result<(Option<Vector3<f64>>, f64)> {
    compute_f2_signed(x_t, x_f, f1, F2Sign::Target)
}

pub fn compute_f2_signed(
    x_t: &Vector3<f64>,
    x_f: &Vector3<f64>,
    f1: &Vector3<f64>,
    sign: F2Sign,
) -> Result<(Option<Vector3<f64>>, f64)> {
    check_unit(f1)?;
    let err = match sign {
        F2Sign::Target => x_f - x_t,
        F2Sign::Printed => x_t - x_f,
    };
    let len = err.norm();
    if len < TARGET_EPS {
        return Ok((None, 0.0));
    }
    let u = err / len;
    let c = f1.dot(&u);
    let rejection = u - c * f1;
    let r = rejection.norm();
    let theta = r.atan2(c);
    if r < PARALLEL_EPS {
        return Ok((None, theta));
    }
    Ok((Some(rejection / r), theta))
}

/// `F (F1 |cos theta| + F2 |sin theta|)`, or `F F1` without an F2.
pub fn hybrid_force(magnitude: f64, f1: &Vector3<f64>, f2: Option<&Vector3<f64>>, theta: f64) -> Vector3<f64> {
    match f2 {
        Some(f2) => magnitude * (f1 * theta.cos().abs() + f2 * theta.sin().abs()),
        None => magnitude * f1,
    }
}

/// Piecewise-linear force magnitude over the error ratio `e / e_o`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForceSchedule {
    pub f_hi: f64,
    pub f_lo: f64,
    pub hi_frac: f64,
    pub lo_frac: f64,
    /// N per unit of e/e_o on the linear branch.
    pub slope: f64,
    pub offset: f64,
}

impl Default for ForceSchedule {
    fn default() -> Self {
        Self { f_hi: 40.0, f_lo: 5.0, hi_frac: 0.2, lo_frac: 0.1, slope: 350.0, offset: -30.0 }
    }
}

impl ForceSchedule {
    pub fn validate(&self) -> Result<()> {
        let finite =
            [self.f_hi, self.f_lo, self.hi_frac, self.lo_frac, self.slope, self.offset].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::config("schedule constants must be finite"));
        }
        if !(self.f_lo >= 0.0 && self.f_hi >= self.f_lo) {
            return Err(Error::config("schedule needs 0 <= f_lo <= f_hi"));
        }
        if !(self.lo_frac > 0.0 && self.hi_frac > self.lo_frac) {
            return Err(Error::config("schedule needs 0 < lo_frac < hi_frac"));
        }
        let at_hi = self.slope * self.hi_frac + self.offset;
        let at_lo = self.slope * self.lo_frac + self.offset;
        let tol = 1e-9 * (1.0 + self.f_hi.abs());
        if (at_hi - self.f_hi).abs() > tol || (at_lo - self.f_lo).abs() > tol {
            return Err(Error::config(format!(
                "schedule is discontinuous: linear branch gives {at_lo} and {at_hi} at the breakpoints, expected {} and {}",
                self.f_lo, self.f_hi
            )));
        }
        Ok(())
    }

    /// Force magnitude for error `e` relative to the initial error `e_o`.
    pub fn force(&self, e: f64, e_o: f64) -> Result<f64> {
        if !(e_o > 0.0) {
            return Err(Error::invalid(format!("initial error must be > 0, got {e_o}")));
        }
        if !(e >= 0.0) {
            return Err(Error::invalid(format!("error must be >= 0, got {e}")));
        }
        let hi = self.hi_frac * e_o;
        let lo = self.lo_frac * e_o;
        Ok(if e > hi {
            self.f_hi
        } else if e > lo {
            // same line as slope * e / e_o + offset, anchored at the breakpoints
            // so both ends are hit exactly
            self.f_lo + (self.f_hi - self.f_lo) * ((e - lo) / (hi - lo))
        } else {
            self.f_lo
        })
    }
}

/// Scheduled force with the default constants (40 N / 5 N at 0.2 / 0.1 of e_o).
pub fn schedule_force(e: f64, e_o: f64) -> Result<f64> {
    ForceSchedule::default().force(e, e_o)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorqueLaw {
    pub k_p: f64,
}

impl TorqueLaw {
    pub fn new(k_p: f64) -> Result<Self> {
        if !(k_p >= 0.0 && k_p.is_finite()) {
            return Err(Error::config(format!("k_p must be >= 0, got {k_p}")));
        }
        Ok(Self { k_p })
    }

    pub fn command(&self, tau_c: &Vector3<f64>) -> Vector3<f64> {
        torque_command(tau_c, self.k_p)
    }
}

/// `-k_p [tau_x, tau_y, 0]`, tool frame.
pub fn torque_command(tau_c: &Vector3<f64>, k_p: f64) -> Vector3<f64> {
    Vector3::new(-k_p * tau_c.x, -k_p * tau_c.y, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ErrorMetrics {
    pub e: f64,
    pub e_n: f64,
    pub e_p: f64,
}

pub fn error_metrics(
    x_t: &Vector3<f64>,
    x_f: &Vector3<f64>,
    f1: &Vector3<f64>,
    f2: Option<&Vector3<f64>>,
) -> ErrorMetrics {
    let err = x_f - x_t;
    ErrorMetrics { e: err.norm(), e_n: err.dot(f1), e_p: f2.map_or(0.0, |f2| err.dot(f2)) }
}

/// Compliance settings of the robot's force mode. Every axis except the
/// tool z-rotation is compliant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplianceConfig {
    pub force_gain: f64,
    pub damping: f64,
}

impl Default for ComplianceConfig {
    fn default() -> Self {
        Self { force_gain: 1.0, damping: 0.1 }
    }
}

impl ComplianceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::config(format!("compliance damping must be in (0, 1], got {}", self.damping)));
        }
        if !(self.force_gain > 0.0 && self.force_gain.is_finite()) {
            return Err(Error::config("compliance force gain must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerConfig {
    pub k_p: f64,
    pub schedule: ForceSchedule,
    /// s
    pub dt: f64,
    /// Command `F F1` only, without the F2 correction.
    pub pure_force: bool,
    /// Constant magnitude instead of the schedule, N.
    pub fixed_force_n: Option<f64>,
    pub f2_sign: F2Sign,
    pub compliance: ComplianceConfig,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            k_p: 4.0,
            schedule: ForceSchedule::default(),
            dt: 0.002,
            pure_force: false,
            fixed_force_n: None,
            f2_sign: F2Sign::Target,
            compliance: ComplianceConfig::default(),
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        TorqueLaw::new(self.k_p)?;
        self.schedule.validate()?;
        self.compliance.validate()?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config("controller dt must be > 0"));
        }
        if let Some(f) = self.fixed_force_n {
            if !(f >= 0.0 && f.is_finite()) {
                return Err(Error::config(format!("fixed force must be >= 0, got {f}")));
            }
        }
        Ok(())
    }
}

/// Output of one control tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TickOutput {
    pub command: HybridForceCommand,
    pub metrics: ErrorMetrics,
    /// Commanded torque, tool frame, N*mm.
    pub torque: Vector3<f64>,
    pub e_o: f64,
}

/// Controller memory: the current target and the latched initial error.
#[derive(Debug, Clone, PartialEq)]
pub struct Controller {
    config: ControllerConfig,
    target: Vector3<f64>,
    e_o: Option<f64>,
}

impl Controller {
    pub fn new(config: ControllerConfig, target: Vector3<f64>) -> Result<Self> {
        config.validate()?;
        Ok(Self { config, target, e_o: None })
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.config
    }

    pub fn target(&self) -> Vector3<f64> {
        self.target
    }

    pub fn latched_error(&self) -> Option<f64> {
        self.e_o
    }

    /// Swaps the desired point; the initial error re-latches on the next
    /// tick. Re-targeting to the current point changes nothing.
    pub fn retarget(&mut self, target: Vector3<f64>) {
        if target != self.target {
            self.target = target;
            self.e_o = None;
        }
    }

    /// One control update. `f1` is the coil axis (base frame), `tau_c` the
    /// measured torque in the tool frame.
    pub fn tick(&mut self, x_t: &Vector3<f64>, f1: &Vector3<f64>, tau_c: &Vector3<f64>) -> Result<TickOutput> {
        let cfg = &self.config;
        let (f2, theta) = compute_f2_signed(x_t, &self.target, f1, cfg.f2_sign)?;
        let metrics = error_metrics(x_t, &self.target, f1, f2.as_ref());
        let e_o = *self.e_o.get_or_insert(metrics.e);

        let magnitude = match cfg.fixed_force_n {
            Some(f) => f,
            // a zero initial error means the coil started on target
            None if e_o < TARGET_EPS => cfg.schedule.f_lo,
            None => cfg.schedule.force(metrics.e, e_o)?,
        };
        let force = if cfg.pure_force { magnitude * f1 } else { hybrid_force(magnitude, f1, f2.as_ref(), theta) };
        Ok(TickOutput {
            command: HybridForceCommand { f1: *f1, f2, theta, magnitude, force },
            metrics,
            torque: torque_command(tau_c, cfg.k_p),
            e_o,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(x: f64, y: f64, z: f64) -> Vector3<f64> {
        Vector3::new(x, y, z)
    }

    #[test]
    fn f2_worked_example() {
        let f1 = v(0.0, 0.0, -1.0);
        let (f2, theta) = compute_f2(&Vector3::zeros(), &v(3.0, 0.0, 4.0), &f1).unwrap();
        assert!((f2.unwrap() - v(1.0, 0.0, 0.0)).norm() < 1e-12);
        assert!((theta.cos() + 0.8).abs() < 1e-12);
        assert!((theta.to_degrees() - 143.130_102_354_155_98).abs() < 1e-9);
    }

    #[test]
    fn f2_degenerate_cases() {
        let f1 = v(0.0, 0.0, -1.0);
        let x = v(1.0, 2.0, 3.0);
        assert_eq!(compute_f2(&x, &x, &f1).unwrap(), (None, 0.0));
        let (f2, theta) = compute_f2(&x, &(x + v(0.0, 0.0, 5.0)), &f1).unwrap();
        assert!(f2.is_none());
        assert!((theta - std::f64::consts::PI).abs() < 1e-12);
        assert!(compute_f2(&x, &v(0.0, 0.0, 0.0), &v(0.0, 0.0, 2.0)).is_err());
    }

    #[test]
    fn printed_sign_flips_f2() {
        let f1 = v(0.0, 0.0, -1.0);
        let (a, ta) = compute_f2_signed(&Vector3::zeros(), &v(3.0, 0.0, 4.0), &f1, F2Sign::Target).unwrap();
        let (b, tb) = compute_f2_signed(&Vector3::zeros(), &v(3.0, 0.0, 4.0), &f1, F2Sign::Printed).unwrap();
        assert!((a.unwrap() + b.unwrap()).norm() < 1e-12);
        assert!((ta + tb - std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn hybrid_worked_example() {
        let f1 = v(0.0, 0.0, -1.0);
        let f2 = v(1.0, 0.0, 0.0);
        let theta = (-0.8f64).acos();
        let f = hybrid_force(10.0, &f1, Some(&f2), theta);
        assert!((f - v(6.0, 0.0, -8.0)).norm() < 1e-12);
        assert!((f.norm() - 10.0).abs() < 1e-12);
        assert_eq!(hybrid_force(7.0, &f1, Some(&f2), 0.0), 7.0 * f1);
        let half = hybrid_force(7.0, &f1, Some(&f2), std::f64::consts::FRAC_PI_2);
        assert!((half - 7.0 * f2).norm() < 1e-15);
        assert_eq!(hybrid_force(3.0, &f1, None, 1.0), 3.0 * f1);
    }

    #[test]
    fn schedule_examples() {
        assert_eq!(schedule_force(20.0, 50.0).unwrap(), 40.0);
        assert!((schedule_force(7.5, 50.0).unwrap() - 22.5).abs() < 1e-12);
        assert_eq!(schedule_force(5.0, 50.0).unwrap(), 5.0);
        assert_eq!(schedule_force(10.0, 50.0).unwrap(), 40.0);
        assert_eq!(schedule_force(0.0, 50.0).unwrap(), 5.0);
        assert!(schedule_force(1.0, 0.0).is_err());
        assert!(schedule_force(-1.0, 1.0).is_err());
    }

    #[test]
    fn schedule_validation() {
        assert!(ForceSchedule::default().validate().is_ok());
        let bad = ForceSchedule { slope: 300.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = ForceSchedule { lo_frac: 0.3, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn torque_examples() {
        assert_eq!(torque_command(&v(2.0, -3.0, 5.0), 4.0), v(-8.0, 12.0, 0.0));
        assert_eq!(torque_command(&Vector3::zeros(), 4.0), Vector3::zeros());
        assert_eq!(torque_command(&v(2.0, -3.0, 5.0), 0.0).norm(), 0.0);
        assert!(TorqueLaw::new(-1.0).is_err());
    }

    #[test]
    fn metric_examples() {
        let m = error_metrics(&Vector3::zeros(), &v(3.0, 0.0, 4.0), &v(0.0, 0.0, -1.0), Some(&v(1.0, 0.0, 0.0)));
        assert_eq!((m.e, m.e_n, m.e_p), (5.0, -4.0, 3.0));
        let x = v(1.0, 1.0, 1.0);
        assert_eq!(error_metrics(&x, &x, &v(0.0, 0.0, 1.0), None), ErrorMetrics::default());
        let m = error_metrics(&Vector3::zeros(), &v(0.0, 0.0, -2.0), &v(0.0, 0.0, -1.0), None);
        assert_eq!((m.e, m.e_n, m.e_p), (2.0, 2.0, 0.0));
    }

    #[test]
    fn first_tick_latches_and_commands_high_force() {
        let f1 = v(0.0, 0.0, -1.0);
        let mut c = Controller::new(ControllerConfig::default(), v(3.0, 0.0, -4.0)).unwrap();
        let out = c.tick(&Vector3::zeros(), &f1, &Vector3::zeros()).unwrap();
        assert_eq!(out.e_o, 5.0);
        assert_eq!(out.command.magnitude, 40.0);
        // converged: pure low force along the hybrid direction
        let out = c.tick(&v(3.0, 0.0, -3.8), &f1, &Vector3::zeros()).unwrap();
        assert_eq!(out.command.magnitude, 5.0);
        assert!((out.command.force - 5.0 * f1).norm() < 1e-12);
        assert_eq!(out.torque, Vector3::zeros());
    }

    #[test]
    fn retarget_relatches() {
        let f1 = v(0.0, 0.0, -1.0);
        let mut c = Controller::new(ControllerConfig::default(), v(0.0, 0.0, -10.0)).unwrap();
        c.tick(&Vector3::zeros(), &f1, &Vector3::zeros()).unwrap();
        let x = v(0.0, 0.0, -9.5);
        assert_eq!(c.tick(&x, &f1, &Vector3::zeros()).unwrap().command.magnitude, 5.0);
        c.retarget(v(0.0, 0.0, -10.0));
        assert_eq!(c.latched_error(), Some(10.0));
        c.retarget(v(7.0, 0.0, -10.0));
        assert_eq!(c.latched_error(), None);
        let out = c.tick(&x, &f1, &Vector3::zeros()).unwrap();
        assert_eq!(out.command.magnitude, 40.0);
        assert!((out.e_o - (7.0f64 * 7.0 + 0.25).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn pure_and_fixed_modes() {
        let f1 = v(0.0, 0.0, -1.0);
        let cfg = ControllerConfig { pure_force: true, fixed_force_n: Some(20.0), ..Default::default() };
        let mut c = Controller::new(cfg, v(3.0, 0.0, -4.0)).unwrap();
        let out = c.tick(&Vector3::zeros(), &f1, &v(1.0, 1.0, 1.0)).unwrap();
        assert_eq!(out.command.force, 20.0 * f1);
        assert_eq!(out.metrics.e_p, 3.0);
        assert_eq!(out.torque, v(-4.0, -4.0, 0.0));
    }

    #[test]
    fn config_json_defaults_and_rejects_unknown() {
        let c: ControllerConfig = serde_json::from_str(r#"{"k_p": 2.0, "f2_sign": "printed"}"#).unwrap();
        assert_eq!(c.k_p, 2.0);
        assert_eq!(c.f2_sign, F2Sign::Printed);
        assert_eq!(c.schedule, ForceSchedule::default());
        assert!(serde_json::from_str::<ControllerConfig>(r#"{"kp": 2.0}"#).is_err());
    }

    fn unit() -> impl Strategy<Value = Vector3<f64>> {
        (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)
            .prop_filter("non-zero", |(x, y, z)| x * x + y * y + z * z > 1e-3)
            .prop_map(|(x, y, z)| Vector3::new(x, y, z).normalize())
    }

    fn point() -> impl Strategy<Value = Vector3<f64>> {
        (-200.0f64..200.0, -200.0f64..200.0, -200.0f64..200.0).prop_map(|(x, y, z)| Vector3::new(x, y, z))
    }

    proptest! {
        #[test]
        fn schedule_continuous_and_monotone(e_o in 0.1f64..500.0, r in 0.0f64..0.3, h in 1e-13f64..1e-10) {
            let s = ForceSchedule::default();
            let a = s.force(r * e_o, e_o).unwrap();
            let b = s.force(r * e_o + h * e_o, e_o).unwrap();
            prop_assert!(b >= a);
            prop_assert!(b - a < 1e-9 + 350.0 * h * 2.0);
            prop_assert!((5.0..=40.0).contains(&a));
        }

        #[test]
        fn hybrid_norm_and_orthogonality(f in 0.0f64..60.0, f1 in unit(), x_t in point(), x_f in point()) {
            let (f2, theta) = compute_f2(&x_t, &x_f, &f1).unwrap();
            let force = hybrid_force(f, &f1, f2.as_ref(), theta);
            if let Some(f2) = f2 {
                prop_assert!((force.norm() - f).abs() < 1e-9);
                prop_assert!(f1.dot(&f2).abs() < 1e-9);
                let u = (x_f - x_t).normalize();
                // f2 lies in span{f1, u}
                prop_assert!(f2.dot(&f1.cross(&u)).abs() < 1e-9);
            }
        }

        #[test]
        fn error_recomposition(f1 in unit(), x_t in point(), x_f in point()) {
            let (f2, _) = compute_f2(&x_t, &x_f, &f1).unwrap();
            let m = error_metrics(&x_t, &x_f, &f1, f2.as_ref());
            let err = x_f - x_t;
            let rebuilt = m.e_n * f1 + f2.map_or(Vector3::zeros(), |f2| m.e_p * f2);
            let proj = match f2 {
                Some(f2) => err.dot(&f1) * f1 + err.dot(&f2) * f2,
                None => err.dot(&f1) * f1,
            };
            prop_assert!((rebuilt - proj).norm() < 1e-9);
            prop_assert!(m.e * m.e >= m.e_n * m.e_n + m.e_p * m.e_p - 1e-6);
        }

        #[test]
        fn torque_linear_with_zero_z(t in point(), s in point(), k in 0.0f64..10.0, c in -5.0f64..5.0) {
            prop_assert_eq!(torque_command(&t, k).z, 0.0);
            let lhs = torque_command(&(t + c * s), k);
            let rhs = torque_command(&t, k) + c * torque_command(&s, k);
            prop_assert!((lhs - rhs).norm() < 1e-9 * (1.0 + lhs.norm()));
        }
    }
}
