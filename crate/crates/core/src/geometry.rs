//! Rigid-body pose algebra and the camera-to-base calibration chain.
//!
//! A [`Pose`] `a_T_b` maps coordinates expressed in frame `b` (`from`) into
//! frame `a` (`to`). Chaining therefore requires `lhs.from == rhs.to`:
//!
//! ```text
//! b_T_c = b_T_e * e_T_t * t_T_c
//! ```
//!
//! Rotations are stored as 3x3 matrices. Quaternions only appear at the
//! serialization boundary and inside rotation averaging.

use std::fmt;

use nalgebra::{Matrix3, Matrix4, Quaternion, Rotation3, Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Orthonormality / determinant tolerance accepted for rotation matrices.
pub const ROTATION_TOLERANCE: f64 = 1e-9;

/// Drift above which a composed rotation is re-orthonormalized.
const REORTHONORMALIZE_DRIFT: f64 = 1e-12;

/// Per-sample rotation spread above which calibration samples are flagged.
pub const CALIBRATION_SPREAD_DEG: f64 = 5.0;

/// Semantic frame labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    #[serde(alias = "b")]
    Base,
    #[serde(alias = "c")]
    Camera,
    #[serde(alias = "e")]
    EndEffector,
    #[serde(alias = "t")]
    Tool,
    #[serde(alias = "h")]
    Head,
    #[serde(alias = "x")]
    Target,
}

impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Frame::Base => "base",
            Frame::Camera => "camera",
            Frame::EndEffector => "end_effector",
            Frame::Tool => "tool",
            Frame::Head => "head",
            Frame::Target => "target",
        };
        f.write_str(s)
    }
}

/// A proper rotation matrix (orthonormal, determinant +1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix3(Matrix3<f64>);

impl RotationMatrix3 {
    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    /// Validates `m` against the orthonormality and determinant checks.
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidRotation("non-finite entry".into()));
        }
        let drift = orthonormality_drift(&m);
        if drift > ROTATION_TOLERANCE {
            return Err(Error::InvalidRotation(format!("R^T R deviates from identity by {drift:e}")));
        }
        let det = m.determinant();
        if (det - 1.0).abs() > ROTATION_TOLERANCE {
            return Err(Error::InvalidRotation(format!("determinant {det} != 1")));
        }
        Ok(Self(m))
    }

    /// Projects a nearly-orthonormal matrix back onto SO(3).
    pub fn orthonormalized(m: Matrix3<f64>) -> Self {
        let guess = Rotation3::from_matrix_unchecked(m);
        let r = Rotation3::from_matrix_eps(&m, 1e-15, 64, guess);
        Self(*r.matrix())
    }

    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Self {
        match Unit::try_new(*axis, 1e-15) {
            Some(axis) => Self(*Rotation3::from_axis_angle(&axis, angle).matrix()),
            None => Self::identity(),
        }
    }

    /// Rotation by the vector `w` (axis * angle).
    pub fn exp(w: &Vector3<f64>) -> Self {
        Self(*Rotation3::new(*w).matrix())
    }

    pub fn from_quaternion(q: &UnitQuaternion<f64>) -> Self {
        Self(*q.to_rotation_matrix().matrix())
    }

    pub fn to_quaternion(&self) -> UnitQuaternion<f64> {
        UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(self.0))
    }

    /// Shortest rotation carrying direction `from` onto direction `to`.
    ///
    /// Antiparallel inputs pick an arbitrary perpendicular axis.
    pub fn rotation_between(from: &Vector3<f64>, to: &Vector3<f64>) -> Self {
        let a = from.normalize();
        let b = to.normalize();
        let cos = a.dot(&b).clamp(-1.0, 1.0);
        let cross = a.cross(&b);
        let sin = cross.norm();
        if sin < 1e-12 {
            if cos > 0.0 {
                return Self::identity();
            }
            let axis = any_perpendicular(&a);
            return Self::from_axis_angle(&axis, std::f64::consts::PI);
        }
        Self::from_axis_angle(&(cross / sin), sin.atan2(cos))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    /// Column `i` of the matrix, i.e. the i-th axis of the rotated frame.
    pub fn axis(&self, i: usize) -> Vector3<f64> {
        self.0.column(i).into_owned()
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self(self.0 * other.0)
    }

    pub fn rotate(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.0 * v
    }

    /// Rotation angle in `[0, pi]`.
    pub fn angle(&self) -> f64 {
        let m = &self.0;
        let skew = Vector3::new(m[(2, 1)] - m[(1, 2)], m[(0, 2)] - m[(2, 0)], m[(1, 0)] - m[(0, 1)]);
        (skew.norm() / 2.0).atan2((m.trace() - 1.0) / 2.0)
    }

    /// Angle of the relative rotation `self^T * other`.
    pub fn angle_to(&self, other: &Self) -> f64 {
        self.transpose().mul(other).angle()
    }

    /// Interpolates along the geodesic; `s` in `[0, 1]`.
    pub fn slerp(&self, other: &Self, s: f64) -> Self {
        let a = self.to_quaternion();
        let b = other.to_quaternion();
        Self::from_quaternion(&a.slerp(&b, s))
    }

    /// Max-entry deviation of `R^T R` from identity.
    pub fn drift(&self) -> f64 {
        orthonormality_drift(&self.0)
    }
}

fn orthonormality_drift(m: &Matrix3<f64>) -> f64 {
    (m.transpose() * m - Matrix3::identity()).amax()
}

/// Some unit vector perpendicular to `v` (which must be non-zero).
pub fn any_perpendicular(v: &Vector3<f64>) -> Vector3<f64> {
    let n = v.normalize();
    let helper = if n.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    n.cross(&helper).normalize()
}

/// Rigid transform `to_T_from`. Translation is in millimeters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PoseRecord", into = "PoseRecord")]
pub struct Pose {
    pub rotation: RotationMatrix3,
    pub translation: Vector3<f64>,
    pub from: Frame,
    pub to: Frame,
}

impl Pose {
    pub fn new(rotation: RotationMatrix3, translation: Vector3<f64>, from: Frame, to: Frame) -> Self {
        Self { rotation, translation, from, to }
    }

    pub fn identity(from: Frame, to: Frame) -> Self {
        Self::new(RotationMatrix3::identity(), Vector3::zeros(), from, to)
    }

    pub fn from_translation(t: Vector3<f64>, from: Frame, to: Frame) -> Self {
        Self::new(RotationMatrix3::identity(), t, from, to)
    }

    /// Homogeneous 4x4 form with bottom row `[0 0 0 1]`.
    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(self.rotation.matrix());
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.rotate(p) + self.translation
    }

    pub fn transform_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.rotate(v)
    }

    /// Relabels the frames without touching the transform.
    pub fn with_frames(mut self, from: Frame, to: Frame) -> Self {
        self.from = from;
        self.to = to;
        self
    }
}

/// `a * b`; requires `a.from == b.to`.
pub fn compose(a: &Pose, b: &Pose) -> Result<Pose> {
    if a.from != b.to {
        return Err(Error::FrameMismatch { left_from: a.from, right_to: b.to });
    }
    Ok(compose_unchecked(a, b))
}

fn compose_unchecked(a: &Pose, b: &Pose) -> Pose {
    let mut rotation = a.rotation.mul(&b.rotation);
    if rotation.drift() > REORTHONORMALIZE_DRIFT {
        rotation = RotationMatrix3::orthonormalized(*rotation.matrix());
    }
    let translation = a.rotation.rotate(&b.translation) + a.translation;
    Pose::new(rotation, translation, b.from, a.to)
}

/// `(R^T, -R^T t)` with the frames swapped.
pub fn inverse(p: &Pose) -> Pose {
    let rt = p.rotation.transpose();
    let t = -rt.rotate(&p.translation);
    Pose::new(rt, t, p.to, p.from)
}

/// `b_T_x = b_T_c * c_T_x`.
pub fn camera_to_base(base_from_camera: &Pose, camera_from_x: &Pose) -> Result<Pose> {
    if base_from_camera.from != Frame::Camera || base_from_camera.to != Frame::Base {
        return Err(Error::invalid(format!(
            "expected a camera->base pose, got {}->{}",
            base_from_camera.from, base_from_camera.to
        )));
    }
    compose(base_from_camera, camera_from_x)
}

/// One calibration observation: robot kinematics, tool CAD offset and the
/// camera's measurement of the tool marker.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSample {
    /// `b_T_e`
    pub base_from_ee: Pose,
    /// `e_T_t`
    pub ee_from_tool: Pose,
    /// `c_T_t`
    pub camera_from_tool: Pose,
}

impl CalibrationSample {
    /// The camera pose in the base frame implied by this sample alone.
    pub fn base_from_camera(&self) -> Result<Pose> {
        let tool_from_camera = inverse(&self.camera_from_tool);
        let base_from_tool = compose(&self.base_from_ee, &self.ee_from_tool)?;
        compose(&base_from_tool, &tool_from_camera)
    }
}

pub const SAMPLES_SCHEMA: &str = "coilbot.calibration-samples/1";

/// On-disk list of calibration samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplesFile {
    pub schema: String,
    pub samples: Vec<CalibrationSample>,
}

impl SamplesFile {
    pub fn new(samples: Vec<CalibrationSample>) -> Self {
        Self { schema: SAMPLES_SCHEMA.to_string(), samples }
    }

    /// Parses and checks the schema tag, sample count and frame chain.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: Self = serde_json::from_str(text)?;
        if file.schema != SAMPLES_SCHEMA {
            return Err(Error::invalid(format!("expected schema `{SAMPLES_SCHEMA}`, found `{}`", file.schema)));
        }
        if file.samples.is_empty() {
            return Err(Error::invalid("calibration needs at least one sample"));
        }
        for s in &file.samples {
            s.base_from_camera()?;
        }
        Ok(file)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleResidual {
    pub rotation_deg: f64,
    pub translation_mm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub base_from_camera: Pose,
    pub residuals: Vec<SampleResidual>,
    pub max_pairwise_rotation_deg: f64,
    /// Set when two per-sample estimates disagree by more than
    /// [`CALIBRATION_SPREAD_DEG`]. The mean is still produced.
    pub inconsistent: bool,
}

/// Averages the per-sample `b_T_c` estimates.
///
/// Translation is the arithmetic mean; rotation is the normalized sum of
/// quaternions, each sign-aligned with the first sample.
pub fn calibrate_camera_to_base(samples: &[CalibrationSample]) -> Result<Calibration> {
    if samples.is_empty() {
        return Err(Error::invalid("calibration needs at least one sample"));
    }
    let estimates = samples.iter().map(CalibrationSample::base_from_camera).collect::<Result<Vec<_>>>()?;

    let n = estimates.len() as f64;
    let translation = estimates.iter().map(|p| p.translation).sum::<Vector3<f64>>() / n;

    let reference = estimates[0].rotation.to_quaternion();
    let mut acc = nalgebra::Vector4::zeros();
    for p in &estimates {
        let q = p.rotation.to_quaternion();
        let v = q.as_ref().coords;
        if v.dot(&reference.as_ref().coords) < 0.0 {
            acc -= v;
        } else {
            acc += v;
        }
    }
    let mean_q = UnitQuaternion::from_quaternion(Quaternion::from(acc));
    let rotation = if estimates.len() == 1 { estimates[0].rotation } else { RotationMatrix3::from_quaternion(&mean_q) };
    let base_from_camera = Pose::new(rotation, translation, Frame::Camera, Frame::Base);

    let residuals = estimates
        .iter()
        .map(|p| SampleResidual {
            rotation_deg: p.rotation.angle_to(&rotation).to_degrees(),
            translation_mm: (p.translation - translation).norm(),
        })
        .collect();

    let mut max_pairwise = 0.0_f64;
    for (i, a) in estimates.iter().enumerate() {
        for b in &estimates[i + 1..] {
            max_pairwise = max_pairwise.max(a.rotation.angle_to(&b.rotation).to_degrees());
        }
    }

    Ok(Calibration {
        base_from_camera,
        residuals,
        max_pairwise_rotation_deg: max_pairwise,
        inconsistent: max_pairwise > CALIBRATION_SPREAD_DEG,
    })
}

/// Wire form of a [`Pose`]: quaternion `(w, x, y, z)` then translation
/// `(x, y, z)` in millimeters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseRecord {
    pub from: Frame,
    pub to: Frame,
    pub rotation_wxyz: [f64; 4],
    pub translation_mm: [f64; 3],
}

impl TryFrom<PoseRecord> for Pose {
    type Error = Error;

    fn try_from(r: PoseRecord) -> Result<Self> {
        let [w, x, y, z] = r.rotation_wxyz;
        let q = Quaternion::new(w, x, y, z);
        let norm = q.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > 1e-3 {
            return Err(Error::invalid(format!("quaternion norm {norm} is not ~1")));
        }
        let t = Vector3::from(r.translation_mm);
        if t.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite translation"));
        }
        let rotation = RotationMatrix3::from_quaternion(&UnitQuaternion::from_quaternion(q));
        Ok(Pose::new(rotation, t, r.from, r.to))
    }
}

impl From<Pose> for PoseRecord {
    fn from(p: Pose) -> Self {
        let q = p.rotation.to_quaternion();
        // canonical hemisphere: w >= 0
        let q = if q.w < 0.0 { UnitQuaternion::new_unchecked(-q.into_inner()) } else { q };
        PoseRecord { from: p.from, to: p.to, rotation_wxyz: [q.w, q.i, q.j, q.k], translation_mm: p.translation.into() }
    }
}

impl Pose {
    /// Quaternion `(w, x, y, z)` with `w >= 0`.
    pub fn quaternion_wxyz(&self) -> [f64; 4] {
        PoseRecord::from(*self).rotation_wxyz
    }
}

/// A force/torque pair. The frame is stated wherever a wrench crosses an API.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Wrench {
    /// N
    pub force: Vector3<f64>,
    /// N*mm
    pub torque: Vector3<f64>,
}

impl Wrench {
    pub fn new(force: Vector3<f64>, torque: Vector3<f64>) -> Self {
        Self { force, torque }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_array(v: [f64; 6]) -> Self {
        Self::new(Vector3::new(v[0], v[1], v[2]), Vector3::new(v[3], v[4], v[5]))
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.force.x, self.force.y, self.force.z, self.torque.x, self.torque.y, self.torque.z]
    }

    /// Re-expresses both vectors through `r` (no change of reference point).
    pub fn rotated(&self, r: &RotationMatrix3) -> Self {
        Self::new(r.rotate(&self.force), r.rotate(&self.torque))
    }
}

impl std::ops::Add for Wrench {
    type Output = Wrench;
    fn add(self, o: Wrench) -> Wrench {
        Wrench::new(self.force + o.force, self.torque + o.torque)
    }
}

impl std::ops::Sub for Wrench {
    type Output = Wrench;
    fn sub(self, o: Wrench) -> Wrench {
        Wrench::new(self.force - o.force, self.torque - o.torque)
    }
}

impl std::ops::Neg for Wrench {
    type Output = Wrench;
    fn neg(self) -> Wrench {
        Wrench::new(-self.force, -self.torque)
    }
}
