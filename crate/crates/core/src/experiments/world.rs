//! The simulated bench: calibration, the guarded approach, zeroing and the
//! force/torque control loop against the contact plant.

use nalgebra::{UnitQuaternion, Vector3};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{ScenarioConfig, SceneConfig};
use super::log::{torque_ratio, LogRow, TimeSeriesLog};
use crate::contact_sim::{
    contact_wrench, head_motion_script, step_plant, CoilModel, ContactState, HeadModel, HeadMotion, PlantConfig,
    Sensor, Twist,
};
use crate::controller::{compute_f2_signed, error_metrics, Controller, ControllerConfig, TickOutput};
use crate::error::{Error, Result};
use crate::geometry::{
    calibrate_camera_to_base, compose, inverse, Calibration, CalibrationSample, Frame, Pose, RotationMatrix3, Wrench,
};
use crate::trajectory::{
    detect_contact, phase4_zero_adjust, plan_phase1, plan_phase2, plan_phase3, plan_retreat, Phase, PhasePlan,
    SphereGuard,
};

/// Facts about a run that are not in the per-tick log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub scenario: String,
    pub seed: u64,
    pub calibration_inconsistent: bool,
    pub contact_time_s: Option<f64>,
    pub force_start_s: Option<f64>,
    pub retarget_time_s: Option<f64>,
    /// Zero offset captured during zeroing (N, N*mm).
    pub zero_offset: Option<[f64; 6]>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub log: TimeSeriesLog,
    pub plans: Vec<PhasePlan>,
    pub calibration: Option<Calibration>,
    pub info: RunInfo,
}

/// One simulated bench. Owns all mutable state; advance it with
/// [`World::approach`] and then [`World::force_step`].
#[derive(Debug, Clone)]
pub struct World {
    head: HeadModel,
    head_initial: Pose,
    motion: HeadMotion,
    coil: CoilModel,
    plant: PlantConfig,
    sensor: Sensor,
    threshold: f64,
    scene: SceneConfig,
    controller_config: ControllerConfig,
    camera_true: Pose,
    calibration: Calibration,
    target_local: Vector3<f64>,
    x_f: Vector3<f64>,
    pose: Pose,
    omega: Vector3<f64>,
    contact: ContactState,
    controller: Option<Controller>,
    dt: f64,
    tick: u64,
    force_tick: u64,
    log: TimeSeriesLog,
    info: RunInfo,
}

fn random_pose<R: Rng + ?Sized>(rng: &mut R, from: Frame, to: Frame) -> Pose {
    let axis = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let angle = rng.random_range(0.0..std::f64::consts::PI);
    let q = match axis.try_normalize(1e-6) {
        Some(a) => UnitQuaternion::from_axis_angle(&nalgebra::Unit::new_unchecked(a), angle),
        None => UnitQuaternion::identity(),
    };
    let t =
        Vector3::new(rng.random_range(200.0..700.0), rng.random_range(-400.0..400.0), rng.random_range(100.0..800.0));
    Pose::new(RotationMatrix3::from_quaternion(&q), t, from, to)
}

impl World {
    pub fn new(scene: &SceneConfig, scenario: &ScenarioConfig) -> Result<Self> {
        scene.validate()?;
        scenario.validate()?;
        let seed = scenario.effective_seed(scene);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        let sensor_model = scene.sensor.model(&mut rng);
        let camera_true = scene.camera.base_from_camera;
        let camera_from_base = inverse(&camera_true);
        let samples = (0..scene.camera.calibration_samples)
            .map(|_| {
                let base_from_ee = random_pose(&mut rng, Frame::EndEffector, Frame::Base);
                let base_from_tool = compose(&base_from_ee, &scene.camera.ee_from_tool)?;
                Ok(CalibrationSample {
                    base_from_ee,
                    ee_from_tool: scene.camera.ee_from_tool,
                    camera_from_tool: compose(&camera_from_base, &base_from_tool)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let calibration = calibrate_camera_to_base(&samples)?;
        let sensor = Sensor::new(sensor_model, rng.next_u64());

        let head = scene.head.model()?;
        let coil = scene.coil.model()?;
        let compliance = scenario.controller.compliance;
        let plant = PlantConfig { dt: scenario.controller.dt, ..scene.plant }
            .with_compliance(compliance.force_gain, compliance.damping);

        let mut target = scene.target.clone();
        if let Some(o) = scenario.target_offset_mm {
            target.offset_mm = o;
        }
        if !(scene.head.radius_mm + target.offset_mm > 0.0) {
            return Err(Error::config("target offset places the target at or past the head center"));
        }
        let target_local = target.local_point(head.radius);

        let contact = contact_wrench(&scene.approach.start, &coil, &head, &Twist::default());
        let mut world = Self {
            head_initial: head.pose,
            head,
            motion: scenario.head_motion.clone().unwrap_or_else(|| scene.head_motion.clone()),
            coil,
            plant,
            sensor,
            threshold: scene.sensor.contact_threshold_n,
            scene: scene.clone(),
            controller_config: scenario.controller,
            camera_true,
            calibration,
            target_local,
            x_f: Vector3::zeros(),
            pose: scene.approach.start,
            omega: Vector3::zeros(),
            contact,
            controller: None,
            dt: scenario.controller.dt,
            tick: 0,
            force_tick: 0,
            log: TimeSeriesLog::new(),
            info: RunInfo {
                scenario: scenario.name.clone(),
                seed,
                calibration_inconsistent: false,
                contact_time_s: None,
                force_start_s: None,
                retarget_time_s: None,
                zero_offset: None,
            },
        };
        world.info.calibration_inconsistent = world.calibration.inconsistent;
        world.x_f = world.navigated_target();
        Ok(world)
    }

    pub fn calibration(&self) -> &Calibration {
        &self.calibration
    }

    pub fn log(&self) -> &TimeSeriesLog {
        &self.log
    }

    pub fn pose(&self) -> &Pose {
        &self.pose
    }

    pub fn head(&self) -> &HeadModel {
        &self.head
    }

    pub fn target(&self) -> Vector3<f64> {
        self.x_f
    }

    pub fn contact(&self) -> &ContactState {
        &self.contact
    }

    pub fn sensor(&self) -> &Sensor {
        &self.sensor
    }

    pub fn controller(&self) -> Option<&Controller> {
        self.controller.as_ref()
    }

    pub fn info(&self) -> &RunInfo {
        &self.info
    }

    /// Seconds since force control engaged.
    pub fn force_time(&self) -> f64 {
        self.force_tick as f64 * self.dt
    }

    fn now(&self) -> f64 {
        self.tick as f64 * self.dt
    }

    /// A base-frame point as seen by the camera and mapped back through the
    /// calibrated camera pose.
    fn navigate(&self, p: &Vector3<f64>) -> Vector3<f64> {
        let in_camera = inverse(&self.camera_true).transform_point(p);
        self.calibration.base_from_camera.transform_point(&in_camera)
    }

    /// The target point on the head at its current pose, via navigation.
    pub fn navigated_target(&self) -> Vector3<f64> {
        self.navigate(&self.head.pose.transform_point(&self.target_local))
    }

    fn row(&self, phase: Phase, measured: &Wrench, f_true: f64, tick: Option<&TickOutput>) -> LogRow {
        let x_t = self.pose.translation;
        let f1 = self.pose.rotation.axis(2);
        let (metrics, theta, f_cmd) = match tick {
            Some(o) => (o.metrics, o.command.theta, o.command.magnitude),
            None => {
                let (f2, theta) =
                    compute_f2_signed(&x_t, &self.x_f, &f1, self.controller_config.f2_sign).unwrap_or((None, 0.0));
                (error_metrics(&x_t, &self.x_f, &f1, f2.as_ref()), theta, 0.0)
            }
        };
        let f_c = measured.force.norm();
        let [cqw, cqx, cqy, cqz] = self.pose.quaternion_wxyz();
        let [hqw, hqx, hqy, hqz] = self.head.pose.quaternion_wxyz();
        let h = self.head.pose.translation;
        LogRow {
            t: self.now(),
            phase: phase.id(),
            e: metrics.e,
            e_n: metrics.e_n,
            e_p: metrics.e_p,
            abs_e_n: metrics.e_n.abs(),
            abs_e_p: metrics.e_p.abs(),
            theta_deg: theta.to_degrees(),
            f_cmd,
            f_c,
            tau_x: measured.torque.x,
            tau_y: measured.torque.y,
            tau_z: measured.torque.z,
            ratio: torque_ratio(measured.torque.x, measured.torque.y, f_c),
            f_true,
            coil_x: x_t.x,
            coil_y: x_t.y,
            coil_z: x_t.z,
            coil_qw: cqw,
            coil_qx: cqx,
            coil_qy: cqy,
            coil_qz: cqz,
            head_x: h.x,
            head_y: h.y,
            head_z: h.z,
            head_qw: hqw,
            head_qx: hqx,
            head_qy: hqy,
            head_qz: hqz,
            target_x: self.x_f.x,
            target_y: self.x_f.y,
            target_z: self.x_f.z,
        }
    }

    /// Moves the coil kinematically to `pose` and records one tick.
    /// Returns the sensor reading.
    fn kinematic_tick(&mut self, phase: Phase, pose: Pose) -> Result<Wrench> {
        let velocity = (pose.translation - self.pose.translation) / self.dt;
        let turn = pose.rotation.mul(&self.pose.rotation.transpose());
        let angular = turn.to_quaternion().scaled_axis() / self.dt;
        self.pose = pose;
        self.contact = contact_wrench(&self.pose, &self.coil, &self.head, &Twist::new(velocity, angular));
        let truth = self.contact.load_on_head_tool(&self.pose.rotation);
        let measured = self.sensor.read(&truth);
        let row = self.row(phase, &measured, self.contact.force_magnitude(), None);
        self.log.push(row)?;
        self.tick += 1;
        Ok(measured)
    }

    /// Runs the four approach phases: guarded approach, arc, descent until
    /// contact, and zero adjustment. Leaves the coil at the contact pose
    /// with the controller armed.
    pub fn approach(&mut self) -> Result<Vec<PhasePlan>> {
        if self.controller.is_some() {
            return Err(Error::planning("approach already completed"));
        }
        let scene = &self.scene;
        let guard = SphereGuard::around_head(
            self.navigate(&self.head.center()),
            self.head.radius,
            Vector3::from(scene.guard.up),
            scene.guard.center_offset_mm,
            scene.guard.clearance_mm,
        )?;
        let limits = scene.approach.limits;
        let dt = self.dt;
        let start = scene.approach.start;
        let (overshoot, speed) = (scene.approach.max_overshoot_mm, scene.approach.descent_speed());
        let (retreat_mm, readings) = (scene.approach.retreat_mm, scene.approach.zero_readings);

        let p1 = plan_phase1(start.translation, start.rotation, &guard, &limits, dt)?;
        let x_si = p1.key.x_si.unwrap_or(start.translation);
        let after1 = p1.last_pose().map_or(start.rotation, |p| p.rotation);
        let p2 = plan_phase2(x_si, self.x_f, &guard, after1, &limits, dt)?;
        let x_sf = p2.key.x_sf.unwrap_or(x_si);
        let after2 = p2.last_pose().map_or(after1, |p| p.rotation);
        let inward = (self.x_f - x_sf)
            .try_normalize(1e-9)
            .ok_or_else(|| Error::planning("target lies on the guard surface; nothing to descend"))?;
        let mut p3 = plan_phase3(x_sf, self.x_f + overshoot * inward, &guard, after2, speed, dt)?;
        p3.key.x_f = Some(self.x_f);

        self.pose = start;
        for plan in [&p1, &p2] {
            let skip = usize::from(self.tick > 0);
            for s in plan.samples.iter().skip(skip) {
                self.kinematic_tick(plan.phase, s.pose)?;
            }
        }

        let mut contact_pose = None;
        for s in p3.samples.iter().skip(1) {
            let measured = self.kinematic_tick(Phase::Descent, s.pose)?;
            if detect_contact(&measured.force, self.threshold) {
                contact_pose = Some(s.pose);
                break;
            }
        }
        let contact_pose = contact_pose
            .ok_or_else(|| Error::planning(format!("no contact detected within {overshoot} mm past the target")))?;
        self.info.contact_time_s = Some(self.now() - dt);

        let dwell = readings as f64 * dt;
        let p4 = plan_retreat(&contact_pose, retreat_mm, dwell, &limits, dt)?;
        let leg = p4.duration() - dwell;
        let mut zeroed = false;
        for s in p4.samples.iter().skip(1) {
            if !zeroed && s.t > leg / 2.0 {
                let (coil, head) = (&self.coil, &self.head);
                let z = phase4_zero_adjust(&contact_pose, &mut self.sensor, retreat_mm, readings, |p| {
                    contact_wrench(p, coil, head, &Twist::default()).load_on_head_tool(&p.rotation)
                });
                self.info.zero_offset = Some(self.sensor.model.zero_offset.to_array());
                debug_assert_eq!(z.pose, contact_pose);
                zeroed = true;
            }
            self.kinematic_tick(Phase::Zeroing, s.pose)?;
        }
        self.pose = contact_pose;
        self.omega = Vector3::zeros();
        self.contact = contact_wrench(&self.pose, &self.coil, &self.head, &Twist::default());
        self.controller = Some(Controller::new(self.controller_config, self.x_f)?);
        self.info.force_start_s = Some(self.now());
        Ok(vec![p1, p2, p3, p4])
    }

    /// Replaces the desired point in the running controller.
    pub fn retarget(&mut self, x_f: Vector3<f64>) -> Result<()> {
        let controller =
            self.controller.as_mut().ok_or_else(|| Error::planning("retarget needs force control to be active"))?;
        if x_f != self.x_f {
            self.info.retarget_time_s = Some(self.tick as f64 * self.dt);
        }
        controller.retarget(x_f);
        self.x_f = x_f;
        Ok(())
    }

    /// One force-control tick.
    pub fn force_step(&mut self) -> Result<LogRow> {
        let t_rel = self.force_time();
        self.head.pose = head_motion_script(t_rel, &self.motion, &self.head_initial);
        let head_velocity = self.head_initial.rotation.rotate(&self.motion.velocity(t_rel));

        let truth = self.contact.load_on_head_tool(&self.pose.rotation);
        let measured = self.sensor.read(&truth);
        let controller =
            self.controller.as_mut().ok_or_else(|| Error::planning("force control started before the approach"))?;
        let f1 = self.pose.rotation.axis(2);
        let out = controller.tick(&self.pose.translation, &f1, &measured.torque)?;
        let command = Wrench::new(out.command.force, self.pose.rotation.rotate(&out.torque));

        let step = step_plant(&self.pose, &command, &self.coil, &self.head, &head_velocity, &self.omega, &self.plant);
        let row = self.row(Phase::Force, &measured, step.contact.force_magnitude(), Some(&out));
        self.log.push(row)?;
        self.pose = step.pose;
        self.omega = step.twist.angular;
        self.contact = step.contact;
        self.tick += 1;
        self.force_tick += 1;
        Ok(row)
    }

    pub fn into_output(self, plans: Vec<PhasePlan>) -> RunOutput {
        RunOutput { log: self.log, plans, calibration: Some(self.calibration), info: self.info }
    }
}

/// Calibration, approach, zeroing, then `duration_s` of force control.
/// A zero duration simulates nothing and yields a header-only log.
pub fn run_scenario(scene: &SceneConfig, scenario: &ScenarioConfig) -> Result<RunOutput> {
    if scenario.duration_s == 0.0 {
        scene.validate()?;
        scenario.validate()?;
        return Ok(RunOutput {
            log: TimeSeriesLog::new(),
            plans: Vec::new(),
            calibration: None,
            info: RunInfo {
                scenario: scenario.name.clone(),
                seed: scenario.effective_seed(scene),
                calibration_inconsistent: false,
                contact_time_s: None,
                force_start_s: None,
                retarget_time_s: None,
                zero_offset: None,
            },
        });
    }
    let mut world = World::new(scene, scenario)?;
    let plans = world.approach()?;
    let ticks = (scenario.duration_s / scenario.controller.dt).round() as u64;
    let mut retargeted = false;
    for _ in 0..ticks {
        if let Some(at) = scenario.retarget_at_s {
            if !retargeted && world.force_time() >= at - 1e-9 {
                let x_f = world.navigated_target();
                world.retarget(x_f)?;
                retargeted = true;
            }
        }
        world.force_step()?;
    }
    Ok(world.into_output(plans))
}
