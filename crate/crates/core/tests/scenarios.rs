use coilbot::experiments::{presets, run_scenario, summarize, write_run, ScenarioConfig, TimeSeriesLog, World};

fn preset(name: &str, duration: f64) -> ScenarioConfig {
    let mut sc = presets::scenario(name).unwrap();
    sc.duration_s = duration;
    sc
}

#[test]
fn same_seed_gives_identical_logs() {
    let scene = presets::scene().unwrap();
    let sc = preset("fig14", 2.0);
    let a = run_scenario(&scene, &sc).unwrap().log.to_csv_string().unwrap();
    let b = run_scenario(&scene, &sc).unwrap().log.to_csv_string().unwrap();
    assert_eq!(a, b);
}

#[test]
fn different_seeds_differ() {
    let scene = presets::scene().unwrap();
    let mut sc = preset("fig14", 0.5);
    sc.seed = Some(1);
    let a = run_scenario(&scene, &sc).unwrap().log.to_csv_string().unwrap();
    sc.seed = Some(2);
    let b = run_scenario(&scene, &sc).unwrap().log.to_csv_string().unwrap();
    assert_ne!(a, b);
}

#[test]
fn zero_duration_gives_header_only_log() {
    let scene = presets::scene().unwrap();
    let out = run_scenario(&scene, &preset("scheduled", 0.0)).unwrap();
    assert!(out.log.is_empty());
    let csv = out.log.to_csv_string().unwrap();
    assert_eq!(csv.lines().count(), 1);
    assert!(csv.starts_with("t,"));
}

#[test]
fn log_csv_round_trips() {
    let scene = presets::scene().unwrap();
    let out = run_scenario(&scene, &preset("fig17", 1.0)).unwrap();
    let text = out.log.to_csv_string().unwrap();
    let back = TimeSeriesLog::read_csv(text.as_bytes()).unwrap();
    assert_eq!(back.len(), out.log.len());
    assert_eq!(back.to_csv_string().unwrap(), text);
    assert_eq!(summarize(&back), summarize(&out.log));
}

#[test]
fn retarget_to_same_point_changes_nothing() {
    let scene = presets::scene().unwrap();
    let sc = preset("fig11", 1.0);
    let mut plain = World::new(&scene, &sc).unwrap();
    let mut touched = World::new(&scene, &sc).unwrap();
    plain.approach().unwrap();
    touched.approach().unwrap();
    for i in 0..500 {
        if i == 100 {
            let x_f = touched.controller().unwrap().target();
            touched.retarget(x_f).unwrap();
        }
        assert_eq!(plain.force_step().unwrap(), touched.force_step().unwrap());
    }
    assert_eq!(touched.info().retarget_time_s, None);
}

#[test]
fn offset_target_drives_theta_past_150_degrees() {
    let scene = presets::scene().unwrap();
    let out = run_scenario(&scene, &presets::scenario("fig13").unwrap()).unwrap();
    let theta = summarize(&out.log).steady_theta_deg.unwrap();
    assert!(theta > 150.0, "steady theta {theta}");
}

#[test]
fn hybrid_beats_pure_on_both_error_components() {
    let scene = presets::scene().unwrap();
    let hybrid = summarize(&run_scenario(&scene, &presets::scenario("fig11").unwrap()).unwrap().log);
    let pure = summarize(&run_scenario(&scene, &presets::scenario("fig11_pure").unwrap()).unwrap().log);
    let (h_e, p_e) = (hybrid.e_converged.unwrap(), pure.e_converged.unwrap());
    assert!(h_e < p_e, "steady e hybrid {h_e} vs pure {p_e}");
    let (h_n, p_n) = (hybrid.steady_abs_e_n.unwrap(), pure.steady_abs_e_n.unwrap());
    let (h_p, p_p) = (hybrid.steady_abs_e_p.unwrap(), pure.steady_abs_e_p.unwrap());
    assert!(
        p_n - h_n >= p_p - h_p,
        "|e_n| drop {:.4} mm ({p_n:.4} -> {h_n:.4}) smaller than |e_p| drop {:.4} mm ({p_p:.4} -> {h_p:.4})",
        p_n - h_n,
        p_p - h_p
    );
}

#[test]
fn write_run_lays_out_files() {
    let scene = presets::scene().unwrap();
    let out = run_scenario(&scene, &preset("scheduled", 0.5)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (run_dir, report) = write_run(dir.path(), &out, true).unwrap();
    assert_eq!(run_dir, dir.path().join("scheduled"));
    for f in ["log.csv", "summary.json", "plan.csv", "plot_e.svg", "plot_f_c.svg"] {
        assert!(run_dir.join(f).is_file(), "{f} missing");
    }
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["run"]["scenario"], "scheduled");
    assert_eq!(report.metrics, summarize(&out.log));
    let log = TimeSeriesLog::load(&run_dir.join("log.csv")).unwrap();
    assert_eq!(log.len(), out.log.len());
}
