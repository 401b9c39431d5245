use std::path::Path;
use std::process::{Command, Output};

use coilbot::geometry::{compose, inverse, CalibrationSample, Frame, Pose, RotationMatrix3, SamplesFile};
use nalgebra::Vector3;

fn coilbot(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coilbot")).arg("--out").arg(out).args(args).output().unwrap()
}

fn stdout_json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn samples_for(truth: &Pose, robot: &[Pose], ee_from_tool: &Pose) -> SamplesFile {
    let samples = robot
        .iter()
        .map(|b_e| {
            let b_t = compose(b_e, ee_from_tool).unwrap();
            CalibrationSample {
                base_from_ee: *b_e,
                ee_from_tool: *ee_from_tool,
                camera_from_tool: compose(&inverse(truth), &b_t).unwrap(),
            }
        })
        .collect();
    SamplesFile::new(samples)
}

fn robot_poses() -> Vec<Pose> {
    (0..4)
        .map(|i| {
            let k = i as f64;
            let r = RotationMatrix3::from_axis_angle(&Vector3::new(1.0, k, 0.5).normalize(), 0.3 + 0.2 * k);
            Pose::new(r, Vector3::new(300.0 + 20.0 * k, -50.0 * k, 400.0), Frame::EndEffector, Frame::Base)
        })
        .collect()
}

fn write_samples(dir: &Path, file: &SamplesFile) -> std::path::PathBuf {
    let path = dir.join("samples.json");
    std::fs::write(&path, serde_json::to_string_pretty(file).unwrap()).unwrap();
    path
}

#[test]
fn run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = coilbot(dir.path(), &["run", "--preset", "scheduled", "--duration", "0.5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let run = dir.path().join("scheduled");
    for f in ["log.csv", "summary.json", "plan.csv", "plot_e.svg"] {
        assert!(run.join(f).is_file(), "{f} missing");
    }
    assert!(stdout_json(&o)["metrics"].is_object());
}

#[test]
fn run_without_plots_skips_svg() {
    let dir = tempfile::tempdir().unwrap();
    let o = coilbot(dir.path(), &["run", "--duration", "0.2", "--no-plots"]);
    assert!(o.status.success());
    let svgs = std::fs::read_dir(dir.path().join("scheduled"))
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "svg"))
        .count();
    assert_eq!(svgs, 0);
}

#[test]
fn missing_scene_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = coilbot(dir.path(), &["run", "--scene", "/nonexistent/scene.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_preset_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = coilbot(dir.path(), &["run", "--preset", "nope"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("fig11"));
}

#[test]
fn unknown_flag_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = coilbot(dir.path(), &["run", "--bogus"]);
    assert!(!o.status.success());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let o = coilbot(&blocker, &["run", "--duration", "0.1", "--no-plots"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn calibrate_identity_samples() {
    let dir = tempfile::tempdir().unwrap();
    let id = Pose::identity(Frame::Camera, Frame::Base);
    let robot = vec![Pose::identity(Frame::EndEffector, Frame::Base); 3];
    let file = samples_for(&id, &robot, &Pose::identity(Frame::Tool, Frame::EndEffector));
    let path = write_samples(dir.path(), &file);
    let o = coilbot(dir.path(), &["calibrate", path.to_str().unwrap(), "--save"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    let t = &v["base_from_camera"]["translation_mm"];
    for i in 0..3 {
        assert!(t[i].as_f64().unwrap().abs() < 1e-12);
    }
    assert!(dir.path().join("calibration.json").is_file());
}

#[test]
fn calibrate_noiseless_samples_has_tiny_residuals() {
    let dir = tempfile::tempdir().unwrap();
    let truth = Pose::new(
        RotationMatrix3::from_axis_angle(&Vector3::new(0.2, -1.0, 0.4).normalize(), 2.1),
        Vector3::new(800.0, -250.0, 600.0),
        Frame::Camera,
        Frame::Base,
    );
    let tool = Pose::new(
        RotationMatrix3::from_axis_angle(&Vector3::x(), 0.1),
        Vector3::new(0.0, 10.0, 120.0),
        Frame::Tool,
        Frame::EndEffector,
    );
    let path = write_samples(dir.path(), &samples_for(&truth, &robot_poses(), &tool));
    let o = coilbot(dir.path(), &["calibrate", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stderr.is_empty());
    let v = stdout_json(&o);
    assert_eq!(v["inconsistent"], false);
    for r in v["residuals"].as_array().unwrap() {
        assert!(r["translation_mm"].as_f64().unwrap() < 1e-9, "{r}");
        assert!(r["rotation_deg"].as_f64().unwrap() < 1e-9, "{r}");
    }
}

#[test]
fn calibrate_warns_on_inconsistent_samples() {
    let dir = tempfile::tempdir().unwrap();
    let truth = Pose::identity(Frame::Camera, Frame::Base);
    let tool = Pose::identity(Frame::Tool, Frame::EndEffector);
    let mut file = samples_for(&truth, &robot_poses(), &tool);
    let c_t = &mut file.samples[0].camera_from_tool;
    c_t.rotation = RotationMatrix3::from_axis_angle(&Vector3::z(), 20f64.to_radians()).mul(&c_t.rotation);
    let path = write_samples(dir.path(), &file);
    let o = coilbot(dir.path(), &["calibrate", path.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
    assert_eq!(stdout_json(&o)["inconsistent"], true);
}

#[test]
fn calibrate_rejects_malformed_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\"schema\": \"coilbot.calibration-samples/1\", \"samples\": []}").unwrap();
    let o = coilbot(dir.path(), &["calibrate", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn kp_sweep_writes_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let o = coilbot(
        dir.path(),
        &["sweep", "--preset", "fig16", "--axis", "kp", "--values", "0,1,2,4,4.5", "--duration", "0.3", "--no-plots"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout_json(&o).as_array().unwrap().len(), 5);
    let table = std::fs::read_to_string(dir.path().join("fig16_sweep_kp.csv")).unwrap();
    assert_eq!(table.lines().count(), 6);
    assert!(dir.path().join("fig16_kp4.5").join("log.csv").is_file());
}

#[test]
fn single_value_sweep_matches_a_direct_run() {
    let dir = tempfile::tempdir().unwrap();
    let o = coilbot(
        dir.path(),
        &["sweep", "--preset", "fig12", "--axis", "force", "--values", "40", "--duration", "0.3", "--no-plots"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout_json(&o).as_array().unwrap().len(), 1);
    let swept = std::fs::read(dir.path().join("fig12_force40").join("log.csv")).unwrap();

    let scenario = dir.path().join("direct.json");
    let mut sc = coilbot::experiments::presets::scenario("fig12").unwrap();
    sc.name = "direct".into();
    sc.sweep = None;
    sc.controller.fixed_force_n = Some(40.0);
    std::fs::write(&scenario, serde_json::to_string(&sc).unwrap()).unwrap();
    let d = coilbot(dir.path(), &["run", "--scenario", scenario.to_str().unwrap(), "--duration", "0.3", "--no-plots"]);
    assert!(d.status.success(), "{}", String::from_utf8_lossy(&d.stderr));
    assert_eq!(std::fs::read(dir.path().join("direct").join("log.csv")).unwrap(), swept);
}

#[test]
fn report_recomputes_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = coilbot(dir.path(), &["run", "--duration", "0.5", "--no-plots"]);
    assert!(o.status.success());
    let log = dir.path().join("scheduled").join("log.csv");
    let r = coilbot(dir.path(), &["report", log.to_str().unwrap()]);
    assert!(r.status.success());
    assert_eq!(stdout_json(&r), stdout_json(&o)["metrics"]);
}

#[test]
fn presets_are_listed() {
    let dir = tempfile::tempdir().unwrap();
    let o = coilbot(dir.path(), &["presets"]);
    let names = String::from_utf8(o.stdout).unwrap();
    assert!(names.lines().any(|l| l == "fig17"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["run", "--preset", "fig17", "--seed", "7", "--duration", "1", "--no-plots"];
    assert!(coilbot(a.path(), &args).status.success());
    assert!(coilbot(b.path(), &args).status.success());
    let read = |p: &Path| std::fs::read(p.join("fig17").join("log.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
}
