//! Scene and scenario configuration files.

use std::path::Path;

use nalgebra::{UnitQuaternion, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::contact_sim::{CoilModel, HeadModel, HeadMotion, PlantConfig, SensorModel};
use crate::controller::ControllerConfig;
use crate::error::{Error, Result};
use crate::geometry::{Frame, Pose, Wrench};
use crate::trajectory::zeroing::{DEFAULT_RETREAT_MM, DEFAULT_ZERO_READINGS};
use crate::trajectory::MotionLimits;

pub const SCENE_SCHEMA: &str = "coilbot.scene/1";
pub const SCENARIO_SCHEMA: &str = "coilbot.scenario/1";

fn check_schema(found: &str, expected: &str) -> Result<()> {
    if found != expected {
        return Err(Error::config(format!("unsupported schema `{found}`, expected `{expected}`")));
    }
    Ok(())
}

fn finite3(v: &[f64; 3], what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::config(format!("{what} must be finite")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeadConfig {
    /// Head frame in the base frame.
    pub pose: Pose,
    pub radius_mm: f64,
    pub friction: f64,
    /// N/mm
    pub stiffness: f64,
    /// N*s/mm
    pub damping: f64,
    /// N*s/mm
    pub viscous_cap: f64,
}

impl Default for HeadConfig {
    fn default() -> Self {
        Self {
            pose: Pose::from_translation(Vector3::new(500.0, 0.0, 300.0), Frame::Head, Frame::Base),
            radius_mm: 90.0,
            friction: 0.6,
            stiffness: 40.0,
            damping: 0.5,
            viscous_cap: 50.0,
        }
    }
}

impl HeadConfig {
    pub fn model(&self) -> Result<HeadModel> {
        if self.pose.from != Frame::Head || self.pose.to != Frame::Base {
            return Err(Error::config("head pose must map head -> base"));
        }
        let mut head = HeadModel::new(self.pose, self.radius_mm).map_err(to_config)?;
        head.friction = self.friction;
        head.stiffness = self.stiffness;
        head.damping = self.damping;
        head.viscous_cap = self.viscous_cap;
        head.validate().map_err(to_config)?;
        Ok(head)
    }
}

fn to_config(e: Error) -> Error {
    match e {
        Error::InvalidInput(m) => Error::Config(m),
        other => other,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoilConfig {
    pub floor_radius_mm: f64,
    pub rim_half_angle_deg: f64,
    pub grid_rings: usize,
    pub grid_sectors: usize,
}

impl Default for CoilConfig {
    fn default() -> Self {
        Self {
            floor_radius_mm: 100.0,
            rim_half_angle_deg: 30.0,
            grid_rings: CoilModel::DEFAULT_RINGS,
            grid_sectors: CoilModel::DEFAULT_SECTORS,
        }
    }
}

impl CoilConfig {
    pub fn model(&self) -> Result<CoilModel> {
        CoilModel::with_grid(
            self.floor_radius_mm,
            self.rim_half_angle_deg.to_radians(),
            self.grid_rings,
            self.grid_sectors,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorConfig {
    /// Each force bias component is drawn uniformly from +-this, N.
    pub bias_force_range_n: f64,
    /// Each torque bias component is drawn uniformly from +-this, N*mm.
    pub bias_torque_range_nmm: f64,
    /// Fixed bias; replaces the random draw when given.
    pub bias: Option<[f64; 6]>,
    pub noise_force_n: f64,
    pub noise_torque_nmm: f64,
    pub contact_threshold_n: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            bias_force_range_n: 0.5,
            bias_torque_range_nmm: 20.0,
            bias: None,
            noise_force_n: 0.2,
            noise_torque_nmm: 5.0,
            contact_threshold_n: 2.0,
        }
    }
}

impl SensorConfig {
    fn validate(&self) -> Result<()> {
        let nonneg = [self.bias_force_range_n, self.bias_torque_range_nmm, self.noise_force_n, self.noise_torque_nmm];
        if nonneg.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::config("sensor bias ranges and noise levels must be >= 0"));
        }
        if !(self.contact_threshold_n > 0.0) {
            return Err(Error::config("contact threshold must be > 0"));
        }
        if let Some(b) = self.bias {
            if b.iter().any(|v| !v.is_finite()) {
                return Err(Error::config("sensor bias must be finite"));
            }
        }
        Ok(())
    }

    /// Sensor model with the bias drawn from `rng`.
    pub fn model<R: Rng + ?Sized>(&self, rng: &mut R) -> SensorModel {
        let bias = match self.bias {
            Some(b) => Wrench::from_array(b),
            None => {
                let mut b = [0.0; 6];
                for (i, v) in b.iter_mut().enumerate() {
                    let range = if i < 3 { self.bias_force_range_n } else { self.bias_torque_range_nmm };
                    *v = if range > 0.0 { rng.random_range(-range..=range) } else { 0.0 };
                }
                Wrench::from_array(b)
            }
        };
        SensorModel {
            bias,
            noise_force: self.noise_force_n,
            noise_torque: self.noise_torque_nmm,
            zero_offset: Wrench::zero(),
        }
    }
}

/// Target point on the head sphere, head frame spherical coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TargetConfig {
    /// From head +z.
    pub polar_deg: f64,
    /// From head +x toward head +y.
    pub azimuth_deg: f64,
    /// Radial offset from the surface; positive is outside the head, mm.
    pub offset_mm: f64,
}

impl Default for TargetConfig {
    fn default() -> Self {
        // forward-left upper quadrant of the scalp
        Self { polar_deg: 40.0, azimuth_deg: 45.0, offset_mm: 0.0 }
    }
}

impl TargetConfig {
    /// Target in the head frame for a head of radius `head_radius`.
    pub fn local_point(&self, head_radius: f64) -> Vector3<f64> {
        let (p, a) = (self.polar_deg.to_radians(), self.azimuth_deg.to_radians());
        (head_radius + self.offset_mm) * Vector3::new(p.sin() * a.cos(), p.sin() * a.sin(), p.cos())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GuardConfig {
    /// Guard center offset above the head center, mm.
    pub center_offset_mm: f64,
    /// Guard radius minus head radius, mm.
    pub clearance_mm: f64,
    /// World up, base frame.
    pub up: [f64; 3],
}

impl Default for GuardConfig {
    fn default() -> Self {
        Self { center_offset_mm: 25.0, clearance_mm: 30.0, up: [0.0, 0.0, 1.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ApproachConfig {
    pub limits: MotionLimits,
    /// Defaults to the cruise velocity.
    pub descent_speed_mm_s: Option<f64>,
    /// How far past the target the descent may continue before giving up.
    pub max_overshoot_mm: f64,
    /// Coil start pose (tool -> base).
    pub start: Pose,
    pub retreat_mm: f64,
    pub zero_readings: usize,
}

impl Default for ApproachConfig {
    fn default() -> Self {
        // coil pointing down, off to the side and above the head
        let down = UnitQuaternion::from_axis_angle(&Vector3::x_axis(), std::f64::consts::PI);
        Self {
            limits: MotionLimits::default(),
            descent_speed_mm_s: None,
            max_overshoot_mm: 20.0,
            start: Pose::new(
                crate::geometry::RotationMatrix3::from_quaternion(&down),
                Vector3::new(400.0, 150.0, 550.0),
                Frame::Tool,
                Frame::Base,
            ),
            retreat_mm: DEFAULT_RETREAT_MM,
            zero_readings: DEFAULT_ZERO_READINGS,
        }
    }
}

impl ApproachConfig {
    pub fn descent_speed(&self) -> f64 {
        self.descent_speed_mm_s.unwrap_or(self.limits.v_max)
    }

    fn validate(&self) -> Result<()> {
        let l = &self.limits;
        if [l.v_max, l.accel, l.w_max, l.alpha].iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::config("motion limits must be > 0"));
        }
        if !(self.descent_speed() > 0.0) {
            return Err(Error::config("descent speed must be > 0"));
        }
        if !(self.max_overshoot_mm >= 0.0) || !(self.retreat_mm > 0.0) {
            return Err(Error::config("overshoot must be >= 0 and retreat > 0"));
        }
        if self.zero_readings == 0 {
            return Err(Error::config("zero adjustment needs at least one reading"));
        }
        if self.start.from != Frame::Tool || self.start.to != Frame::Base {
            return Err(Error::config("start pose must map tool -> base"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraConfig {
    /// Ground-truth camera pose (camera -> base).
    pub base_from_camera: Pose,
    /// Robot poses used to calibrate.
    pub calibration_samples: usize,
    /// End-effector to tool offset (tool -> end-effector).
    pub ee_from_tool: Pose,
}

impl Default for CameraConfig {
    fn default() -> Self {
        let r = UnitQuaternion::from_euler_angles(0.1, -0.3, 2.5);
        Self {
            base_from_camera: Pose::new(
                crate::geometry::RotationMatrix3::from_quaternion(&r),
                Vector3::new(1200.0, -300.0, 900.0),
                Frame::Camera,
                Frame::Base,
            ),
            calibration_samples: 1,
            ee_from_tool: Pose::from_translation(Vector3::new(0.0, 0.0, 120.0), Frame::Tool, Frame::EndEffector),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub schema: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub head: HeadConfig,
    #[serde(default)]
    pub coil: CoilConfig,
    #[serde(default)]
    pub sensor: SensorConfig,
    #[serde(default)]
    pub plant: PlantConfig,
    #[serde(default)]
    pub head_motion: HeadMotion,
    #[serde(default)]
    pub target: TargetConfig,
    #[serde(default)]
    pub guard: GuardConfig,
    #[serde(default)]
    pub approach: ApproachConfig,
    #[serde(default)]
    pub camera: CameraConfig,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            schema: SCENE_SCHEMA.to_string(),
            seed: 0,
            head: HeadConfig::default(),
            coil: CoilConfig::default(),
            sensor: SensorConfig::default(),
            plant: PlantConfig::default(),
            head_motion: HeadMotion::Fixed,
            target: TargetConfig::default(),
            guard: GuardConfig::default(),
            approach: ApproachConfig::default(),
            camera: CameraConfig::default(),
        }
    }
}

impl SceneConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let scene: Self = serde_json::from_str(text).map_err(|e| Error::config(format!("scene: {e}")))?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read scene {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        check_schema(&self.schema, SCENE_SCHEMA)?;
        let head = self.head.model()?;
        let coil = self.coil.model()?;
        coil.check_wraps(&head)?;
        self.sensor.validate()?;
        self.plant.validate()?;
        self.head_motion.validate()?;
        self.approach.validate()?;
        finite3(&self.guard.up, "guard up-vector")?;
        if !(self.guard.clearance_mm > 0.0) {
            return Err(Error::config("guard clearance must be > 0"));
        }
        if !(self.head.radius_mm + self.target.offset_mm > 0.0) {
            return Err(Error::config("target offset places the target at or past the head center"));
        }
        if self.camera.calibration_samples == 0 {
            return Err(Error::config("calibration needs at least one sample"));
        }
        if self.camera.base_from_camera.from != Frame::Camera || self.camera.base_from_camera.to != Frame::Base {
            return Err(Error::config("camera pose must map camera -> base"));
        }
        if self.camera.ee_from_tool.from != Frame::Tool || self.camera.ee_from_tool.to != Frame::EndEffector {
            return Err(Error::config("tool offset must map tool -> end-effector"));
        }
        Ok(())
    }
}

/// Sweep specification carried inside a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Fixed force magnitude, N.
    Force,
    /// Torque gain.
    Kp,
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "force" => Ok(SweepAxis::Force),
            "kp" => Ok(SweepAxis::Kp),
            other => Err(Error::config(format!("unknown sweep axis `{other}` (expected force or kp)"))),
        }
    }
}

impl std::fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SweepAxis::Force => "force",
            SweepAxis::Kp => "kp",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema: String,
    pub name: String,
    #[serde(default)]
    pub controller: ControllerConfig,
    /// Length of the force-control stage, s.
    #[serde(default = "default_duration")]
    pub duration_s: f64,
    /// Overrides the scene's head motion.
    #[serde(default)]
    pub head_motion: Option<HeadMotion>,
    /// Overrides the scene's target offset, mm.
    #[serde(default)]
    pub target_offset_mm: Option<f64>,
    /// Re-aim at the moved target this long after force control starts, s.
    #[serde(default)]
    pub retarget_at_s: Option<f64>,
    /// Overrides the scene seed.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
}

fn default_duration() -> f64 {
    60.0
}

impl ScenarioConfig {
    pub fn new(name: impl Into<String>, controller: ControllerConfig) -> Self {
        Self {
            schema: SCENARIO_SCHEMA.to_string(),
            name: name.into(),
            controller,
            duration_s: default_duration(),
            head_motion: None,
            target_offset_mm: None,
            retarget_at_s: None,
            seed: None,
            sweep: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let sc: Self = serde_json::from_str(text).map_err(|e| Error::config(format!("scenario: {e}")))?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read scenario {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        check_schema(&self.schema, SCENARIO_SCHEMA)?;
        let safe_name = !self.name.is_empty()
            && self.name.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
            && !self.name.starts_with('.');
        if !safe_name {
            return Err(Error::config(format!("scenario name `{}` must be [A-Za-z0-9._-]+", self.name)));
        }
        self.controller.validate()?;
        if !(self.duration_s >= 0.0 && self.duration_s.is_finite()) {
            return Err(Error::config("duration must be >= 0"));
        }
        if let Some(m) = &self.head_motion {
            m.validate()?;
        }
        if let Some(t) = self.retarget_at_s {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::config("retarget time must be >= 0"));
            }
        }
        if let Some(o) = self.target_offset_mm {
            if !o.is_finite() {
                return Err(Error::config("target offset must be finite"));
            }
        }
        if let Some(s) = &self.sweep {
            if s.values.is_empty() || s.values.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                return Err(Error::config("sweep values must be a non-empty list of numbers >= 0"));
            }
        }
        Ok(())
    }

    /// Seed after applying the scenario override.
    pub fn effective_seed(&self, scene: &SceneConfig) -> u64 {
        self.seed.unwrap_or(scene.seed)
    }
}
