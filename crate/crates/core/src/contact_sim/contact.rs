//! Penalty contact between the concave coil floor and a spherical head.
//!
//! The floor is a spherical cap of radius `R_f` whose curvature center sits
//! at `c_f = x_t + R_f * F1`, where `x_t` is the floor center and `F1` the
//! tool z-axis (pointing toward the head). The cap spans all directions
//! within `rim_half_angle` of `-F1` as seen from `c_f`.
//!
//! Penetration is the deepest intrusion of the head sphere into the cap.
//! For a head seated inside the bowl (`d = |h - c_f| < R_f`) and inside the
//! rim this reduces to `delta = d + R_h - R_f`. Beyond the rim the deepest
//! point is clamped to the rim circle.
//!
//! The contact patch is the set of cap points inside the head. Pressure is
//! taken as uniform over the patch, so the resultant acts at the patch area
//! centroid. Normal force is `k_n * delta + b_n * d(delta)/dt`, friction is
//! Coulomb capped by a viscous law.

use std::f64::consts::PI;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Pose, RotationMatrix3, Wrench};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadModel {
    /// Head frame in the base frame; the origin is the sphere center.
    pub pose: Pose,
    /// mm
    pub radius: f64,
    /// Coulomb coefficient.
    pub friction: f64,
    /// N/mm
    pub stiffness: f64,
    /// N*s/mm
    pub damping: f64,
    /// Viscous slope capping the Coulomb law near zero slip, N*s/mm.
    pub viscous_cap: f64,
}

impl HeadModel {
    pub fn new(pose: Pose, radius: f64) -> Result<Self> {
        let head = Self { pose, radius, friction: 0.6, stiffness: 10.0, damping: 0.5, viscous_cap: 50.0 };
        head.validate()?;
        Ok(head)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0) {
            return Err(Error::config("head radius must be > 0"));
        }
        if !(self.friction >= 0.0) {
            return Err(Error::config("friction coefficient must be >= 0"));
        }
        if !(self.stiffness > 0.0) {
            return Err(Error::config("contact stiffness must be > 0"));
        }
        if !(self.damping >= 0.0) {
            return Err(Error::config("contact damping must be >= 0"));
        }
        if !(self.viscous_cap > 0.0) {
            return Err(Error::config("friction viscous cap must be > 0"));
        }
        Ok(())
    }

    pub fn center(&self) -> Vector3<f64> {
        self.pose.translation
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Cell {
    /// Unit direction from the curvature center, tool frame.
    dir: Vector3<f64>,
    area: f64,
    width: f64,
}

/// Incurved coil floor geometry plus its integration grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CoilModel {
    floor_radius: f64,
    rim_half_angle: f64,
    rings: usize,
    sectors: usize,
    cells: Vec<Cell>,
}

impl CoilModel {
    pub const DEFAULT_RINGS: usize = 48;
    pub const DEFAULT_SECTORS: usize = 192;

    pub fn new(floor_radius: f64, rim_half_angle: f64) -> Result<Self> {
        Self::with_grid(floor_radius, rim_half_angle, Self::DEFAULT_RINGS, Self::DEFAULT_SECTORS)
    }

    /// `rings` polar bands; the outermost band has `sectors` cells and inner
    /// bands proportionally fewer, keeping cell areas roughly equal.
    pub fn with_grid(floor_radius: f64, rim_half_angle: f64, rings: usize, sectors: usize) -> Result<Self> {
        if !(floor_radius > 0.0 && floor_radius.is_finite()) {
            return Err(Error::config("floor radius must be > 0"));
        }
        if !(rim_half_angle > 0.0 && rim_half_angle < PI / 2.0) {
            return Err(Error::config("rim half-angle must be in (0, 90) degrees"));
        }
        if rings == 0 || sectors < 6 || rings > 4096 || sectors > 16384 {
            return Err(Error::config("patch grid resolution out of range"));
        }
        let d_psi = rim_half_angle / rings as f64;
        let mut cells = Vec::new();
        for i in 0..rings {
            let psi = (i as f64 + 0.5) * d_psi;
            let m = ((sectors as f64 * psi.sin() / rim_half_angle.sin()).ceil() as usize).max(6);
            let d_phi = 2.0 * PI / m as f64;
            let area = floor_radius * floor_radius * psi.sin() * d_psi * d_phi;
            for j in 0..m {
                let phi = (j as f64 + 0.5) * d_phi;
                let dir = Vector3::new(psi.sin() * phi.cos(), psi.sin() * phi.sin(), -psi.cos());
                cells.push(Cell { dir, area, width: area.sqrt() });
            }
        }
        Ok(Self { floor_radius, rim_half_angle, rings, sectors, cells })
    }

    /// The model must wrap the head: `R_f >= R_h`.
    pub fn check_wraps(&self, head: &HeadModel) -> Result<()> {
        if self.floor_radius < head.radius {
            return Err(Error::config(format!(
                "floor radius {} must be >= head radius {}",
                self.floor_radius, head.radius
            )));
        }
        Ok(())
    }

    pub fn floor_radius(&self) -> f64 {
        self.floor_radius
    }

    pub fn rim_half_angle(&self) -> f64 {
        self.rim_half_angle
    }

    pub fn grid(&self) -> (usize, usize) {
        (self.rings, self.sectors)
    }

    /// Same geometry on a grid refined by `factor` in both directions.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::with_grid(self.floor_radius, self.rim_half_angle, self.rings * factor, self.sectors * factor)
    }

    /// Total floor area.
    pub fn floor_area(&self) -> f64 {
        self.cells.iter().map(|c| c.area).sum()
    }
}

/// Linear velocity at the tool origin and angular velocity, base frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Twist {
    /// mm/s
    pub linear: Vector3<f64>,
    /// rad/s
    pub angular: Vector3<f64>,
}

impl Twist {
    pub fn new(linear: Vector3<f64>, angular: Vector3<f64>) -> Self {
        Self { linear, angular }
    }

    /// Velocity of a point at offset `r` from the tool origin.
    pub fn point_velocity(&self, r: &Vector3<f64>) -> Vector3<f64> {
        self.linear + self.angular.cross(r)
    }
}

/// Purely geometric part of the contact. All vectors in the base frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactGeometry {
    /// Deepest intrusion of the head into the cap, mm. Positive iff touching.
    pub penetration: f64,
    pub deepest_point: Vector3<f64>,
    /// Unit direction of the normal reaction acting on the coil.
    pub normal: Vector3<f64>,
    pub centroid: Vector3<f64>,
    /// mm^2
    pub patch_area: f64,
    /// Angle between the contact direction and the coil's reversed axis.
    pub off_axis_angle: f64,
}

impl ContactGeometry {
    pub fn in_contact(&self) -> bool {
        self.penetration > 0.0
    }
}

pub fn contact_geometry(coil_pose: &Pose, coil: &CoilModel, head: &HeadModel) -> ContactGeometry {
    let r = &coil_pose.rotation;
    let x_t = coil_pose.translation;
    let rf = coil.floor_radius;
    let rh = head.radius;

    // everything below in the tool frame; floor center at the origin
    let h = r.transpose().rotate(&(head.center() - x_t));
    let c = Vector3::new(0.0, 0.0, rf);
    let rel = h - c;
    let d = rel.norm();
    let axis_out = Vector3::new(0.0, 0.0, -1.0);

    if d < 1e-12 {
        // head centered on the curvature center: uniform gap R_f - R_h
        let deepest = c + rf * axis_out;
        return to_base(r, &x_t, rh - rf, deepest, axis_out, deepest, 0.0, 0.0);
    }
    let u = rel / d;
    let off_axis = u.dot(&axis_out).clamp(-1.0, 1.0).acos();

    let w = if off_axis <= coil.rim_half_angle {
        u
    } else {
        let lateral = Vector3::new(u.x, u.y, 0.0);
        let t = lateral.try_normalize(1e-12).unwrap_or_else(Vector3::x);
        let (s, co) = coil.rim_half_angle.sin_cos();
        Vector3::new(s * t.x, s * t.y, -co)
    };
    let deepest = c + rf * w;
    let gap = deepest - h;
    let gap_norm = gap.norm();
    let penetration = rh - gap_norm;
    let normal = if gap_norm > 1e-12 { gap / gap_norm } else { u };

    if penetration <= 0.0 {
        return to_base(r, &x_t, penetration, deepest, normal, deepest, 0.0, off_axis);
    }

    // cells cut by the patch boundary count with the fraction on the inside,
    // from a linear model of the local intrusion across the cell
    let mut area = 0.0;
    let mut moment = Vector3::zeros();
    for cell in &coil.cells {
        let q = c + rf * cell.dir;
        let to_q = q - h;
        let dist = to_q.norm();
        let intrusion = rh - dist;
        let slope = if dist > 1e-12 {
            let along = (to_q / dist).dot(&cell.dir);
            (1.0 - along * along).max(0.0).sqrt()
        } else {
            0.0
        };
        let spread = slope * cell.width;
        let fraction = if spread > 1e-12 {
            (0.5 + intrusion / spread).clamp(0.0, 1.0)
        } else if intrusion > 0.0 {
            1.0
        } else {
            0.0
        };
        if fraction > 0.0 {
            area += fraction * cell.area;
            moment += (fraction * cell.area) * q;
        }
    }
    // patch thinner than one cell: fall back to the deepest point
    let centroid = if area > 0.0 { moment / area } else { deepest };
    to_base(r, &x_t, penetration, deepest, normal, centroid, area, off_axis)
}

#[allow(clippy::too_many_arguments)]
fn to_base(
    r: &RotationMatrix3,
    x_t: &Vector3<f64>,
    penetration: f64,
    deepest: Vector3<f64>,
    normal: Vector3<f64>,
    centroid: Vector3<f64>,
    patch_area: f64,
    off_axis_angle: f64,
) -> ContactGeometry {
    ContactGeometry {
        penetration,
        deepest_point: r.rotate(&deepest) + x_t,
        normal: r.rotate(&normal),
        centroid: r.rotate(&centroid) + x_t,
        patch_area,
        off_axis_angle,
    }
}

/// Full contact state; wrenches are the reaction acting on the coil, taken
/// about the floor center `x_t`, in the base frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactState {
    pub in_contact: bool,
    pub penetration: f64,
    pub centroid: Vector3<f64>,
    pub normal: Vector3<f64>,
    pub normal_force: f64,
    pub friction_force: Vector3<f64>,
    pub force_on_coil: Vector3<f64>,
    pub torque_on_coil: Vector3<f64>,
    pub patch_area: f64,
    pub off_axis_angle: f64,
}

impl ContactState {
    pub fn free(geometry: &ContactGeometry) -> Self {
        Self {
            in_contact: false,
            penetration: geometry.penetration.min(0.0),
            centroid: geometry.centroid,
            normal: geometry.normal,
            normal_force: 0.0,
            friction_force: Vector3::zeros(),
            force_on_coil: Vector3::zeros(),
            torque_on_coil: Vector3::zeros(),
            patch_area: 0.0,
            off_axis_angle: geometry.off_axis_angle,
        }
    }

    pub(crate) fn from_forces(
        geometry: &ContactGeometry,
        x_t: &Vector3<f64>,
        normal_force: f64,
        friction: Vector3<f64>,
    ) -> Self {
        let force = normal_force * geometry.normal + friction;
        Self {
            in_contact: true,
            penetration: geometry.penetration,
            centroid: geometry.centroid,
            normal: geometry.normal,
            normal_force,
            friction_force: friction,
            force_on_coil: force,
            torque_on_coil: (geometry.centroid - x_t).cross(&force),
            patch_area: geometry.patch_area,
            off_axis_angle: geometry.off_axis_angle,
        }
    }

    /// Reaction force magnitude `F_c`.
    pub fn force_magnitude(&self) -> f64 {
        self.force_on_coil.norm()
    }

    /// Reaction on the coil, base frame, about `x_t`.
    pub fn reaction(&self) -> Wrench {
        Wrench::new(self.force_on_coil, self.torque_on_coil)
    }

    /// Load the coil applies to the head about `x_t`, in the tool frame.
    /// This is what the wrist sensor measures.
    pub fn load_on_head_tool(&self, rotation: &RotationMatrix3) -> Wrench {
        (-self.reaction()).rotated(&rotation.transpose())
    }
}

/// Viscous-capped Coulomb friction opposing the tangential slip `slip_t`.
pub fn friction_force(slip_t: &Vector3<f64>, normal_force: f64, head: &HeadModel) -> Vector3<f64> {
    let speed = slip_t.norm();
    if speed == 0.0 {
        return Vector3::zeros();
    }
    let magnitude = (head.friction * normal_force).min(head.viscous_cap * speed);
    -magnitude * slip_t / speed
}

/// Contact reaction for a coil moving with `relative` twist with respect to
/// the head.
pub fn contact_wrench(coil_pose: &Pose, coil: &CoilModel, head: &HeadModel, relative: &Twist) -> ContactState {
    let g = contact_geometry(coil_pose, coil, head);
    if !g.in_contact() {
        return ContactState::free(&g);
    }
    let x_t = coil_pose.translation;
    // penetration grows when the coil moves against the outward normal
    let depth_rate = -relative.point_velocity(&(g.deepest_point - x_t)).dot(&g.normal);
    let normal_force = (head.stiffness * g.penetration + head.damping * depth_rate).max(0.0);

    let slip = relative.point_velocity(&(g.centroid - x_t));
    let slip_t = slip - slip.dot(&g.normal) * g.normal;
    let friction = friction_force(&slip_t, normal_force, head);
    ContactState::from_forces(&g, &x_t, normal_force, friction)
}
