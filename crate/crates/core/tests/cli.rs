use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_percept-guard"))
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(format!("{name}.json"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write(dir: &Path, name: &str, value: &Value) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path
}

fn ego(speed: f64, steer: f64) -> Value {
    json!({
        "speed_mps": speed, "steering_angle_rad": steer,
        "wheelbase_m": 0.36, "body_length_m": 0.55, "body_width_m": 0.30,
        "max_decel_mps2": 2.0, "reaction_time_s": 0.5, "at": 1000
    })
}

fn frame(source: &str, t: u64, objects: Vec<Value>) -> Value {
    json!({"source": source, "frame_time": t, "objects": objects})
}

fn person(source: &str, x: f64, y: f64, t: u64) -> Value {
    json!({
        "class_label": "person", "width_m": 0.15, "height_m": 0.3,
        "position": {"x_m": x, "y_m": y}, "confidence": 0.9, "sensed_at": t, "source": source
    })
}

#[test]
fn run_ts2_passes_with_inconsistent_summary() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("ts2.jsonl");
    let out = run(&["run", "--scenario", scenario("ts2").to_str().unwrap(), "--out", log.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("0 consistent, 100 inconsistent"), "{text}");
    assert!(fs::read_to_string(&log).unwrap().lines().count() > 100);
}

#[test]
fn run_twice_gives_identical_logs() {
    let dir = tempfile::tempdir().unwrap();
    let paths: Vec<PathBuf> = (0..2).map(|i| dir.path().join(format!("{i}.jsonl"))).collect();
    for p in &paths {
        let out = run(&["run", "--scenario", scenario("approach").to_str().unwrap(), "--out", p.to_str().unwrap()]);
        assert_eq!(code(&out), 0);
    }
    assert_eq!(fs::read(&paths[0]).unwrap(), fs::read(&paths[1]).unwrap());
}

#[test]
fn seed_flag_overrides_scenario_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    run(&["run", "--scenario", scenario("ts3").to_str().unwrap(), "--out", a.to_str().unwrap()]);
    run(&["run", "--scenario", scenario("ts3").to_str().unwrap(), "--seed", "7", "--out", b.to_str().unwrap()]);
    let header: Value = serde_json::from_str(fs::read_to_string(&b).unwrap().lines().next().unwrap()).unwrap();
    assert_eq!(header["seed"], 7);
    assert_ne!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn missing_scenario_exits_2_and_names_path() {
    let out = run(&["run", "--scenario", "/does/not/exist.json"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("/does/not/exist.json"));
}

#[test]
fn failed_expectation_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let mut doc: Value = serde_json::from_str(&fs::read_to_string(scenario("ts2")).unwrap()).unwrap();
    doc["expected"][0]["status"] = json!("consistent");
    let path = write(dir.path(), "ts2_wrong.json", &doc);
    let out = run(&["run", "--scenario", path.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("[FAIL]"));
}

#[test]
fn invalid_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", &json!({"validator": {"max_center_dist_m": 0.0}}));
    let out = run(&["run", "--scenario", scenario("ts1").to_str().unwrap(), "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("validator.max_center_dist_m"));
}

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let ego = write(d, "ego.json", &ego(0.0, 0.0));

    let cam = write(d, "cam.json", &frame("camera", 1000, vec![]));
    let lidar = write(d, "lidar.json", &frame("lidar", 1000, vec![]));
    let args = |c: &Path, l: &Path| {
        vec!["validate".to_owned(), "--camera".into(), c.display().to_string(), "--lidar".into(), l.display().to_string(), "--ego".into(), ego.display().to_string()]
    };
    let out = bin().args(args(&cam, &lidar)).output().unwrap();
    assert_eq!(code(&out), 0);
    let verdict: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(verdict["status"], "consistent");

    let lidar_seen = write(d, "lidar2.json", &frame("lidar", 1000, vec![person("lidar", 1.2, 0.0, 990)]));
    let out = bin().args(args(&cam, &lidar_seen)).output().unwrap();
    assert_eq!(code(&out), 1);
    let verdict: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(verdict["report"]["unmatched_lidar"], json!([0]));

    let old_cam = write(d, "cam_old.json", &frame("camera", 100, vec![]));
    let mut a = args(&old_cam, &lidar);
    a.extend(["--now".into(), "3000".into()]);
    let out = bin().args(a).output().unwrap();
    assert_eq!(code(&out), 3);
    assert!(stdout(&out).contains("\"starved\": \"camera\""));

    let broken = d.join("broken.json");
    fs::write(&broken, "{\"source\": \"camera\",").unwrap();
    assert_eq!(code(&bin().args(args(&broken, &lidar)).output().unwrap()), 2);

    let swapped = write(d, "swapped.json", &frame("lidar", 1000, vec![]));
    assert_eq!(code(&bin().args(args(&swapped, &lidar)).output().unwrap()), 2);
}

#[test]
fn roi_zero_speed_is_base_rectangle_and_mirrors() {
    let dir = tempfile::tempdir().unwrap();
    let parked = write(dir.path(), "parked.json", &ego(0.0, 0.0));
    let out = run(&["roi", "--ego", parked.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let roi: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let xs: Vec<f64> = roi["focus"]["vertices"].as_array().unwrap().iter().map(|v| v[0].as_f64().unwrap()).collect();
    let ys: Vec<f64> = roi["focus"]["vertices"].as_array().unwrap().iter().map(|v| v[1].as_f64().unwrap()).collect();
    assert!(ys.iter().all(|y| y.abs() == 0.55));
    let bumper = 0.36 + (0.55 - 0.36) / 2.0;
    assert_eq!(xs.iter().cloned().fold(f64::INFINITY, f64::min), bumper + 0.22);
    assert_eq!(xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max), bumper + 1.2);

    let left = write(dir.path(), "left.json", &ego(1.0, 0.25));
    let right = write(dir.path(), "right.json", &ego(1.0, -0.25));
    let l: Value = serde_json::from_str(&stdout(&run(&["roi", "--ego", left.to_str().unwrap()]))).unwrap();
    let r: Value = serde_json::from_str(&stdout(&run(&["roi", "--ego", right.to_str().unwrap()]))).unwrap();
    let lv = l["focus"]["vertices"].as_array().unwrap();
    let rv = r["focus"]["vertices"].as_array().unwrap();
    let n = lv.len();
    for i in 0..n {
        assert_eq!(lv[i][0], rv[n - 1 - i][0]);
        assert_eq!(lv[i][1].as_f64().unwrap(), -rv[n - 1 - i][1].as_f64().unwrap());
    }
}

#[test]
fn roi_far_extent_grows_with_speed() {
    let dir = tempfile::tempdir().unwrap();
    let mut last = f64::NEG_INFINITY;
    for k in 0..=10 {
        let path = write(dir.path(), &format!("e{k}.json"), &ego(k as f64 * 0.2, 0.1));
        let roi: Value = serde_json::from_str(&stdout(&run(&["roi", "--ego", path.to_str().unwrap()]))).unwrap();
        let far = roi["focus"]["vertices"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v[0].as_f64().unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(far >= last);
        last = far;
    }
}

#[test]
fn roi_rejects_bad_ego() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "bad.json", &ego(-1.0, 0.0));
    assert_eq!(code(&run(&["roi", "--ego", path.to_str().unwrap()])), 2);
}

#[test]
fn check_rescores_a_written_log() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("ts1.jsonl");
    run(&["run", "--scenario", scenario("ts1").to_str().unwrap(), "--out", log.to_str().unwrap()]);
    let out = run(&["check", "--log", log.to_str().unwrap(), "--scenario", scenario("ts1").to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let out = run(&["check", "--log", log.to_str().unwrap(), "--scenario", scenario("ts2").to_str().unwrap()]);
    assert_eq!(code(&out), 1);
}
