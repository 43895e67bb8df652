//! End-to-end tests of the `wristkin` binary: exit codes, stream formats,
//! and report determinism.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nalgebra::Vector3;
use wristkin::tool::tool_tip_pose;
use wristkin_cli::config::HarnessConfig;
use wristkin_cli::records::{read_jsonl, CommandRecord, MetricsRecord, TrajectoryRecord};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wristkin"))
}

fn write_default_config(dir: &Path) -> PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, "{}").unwrap();
    path
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

#[test]
fn score_empty_file_prints_zero() {
    let dir = tempfile::tempdir().unwrap();
    let events = dir.path().join("events.jsonl");
    fs::write(&events, "").unwrap();
    let out = run(bin().args(["score", "--input"]).arg(&events));
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "0");
}

#[test]
fn score_sums_weighted_events() {
    let dir = tempfile::tempdir().unwrap();
    let events = dir.path().join("events.jsonl");
    fs::write(
        &events,
        concat!(
            "{\"t\": 1.0, \"kind\": \"collision\"}\n",
            "{\"t\": 2.0, \"kind\": \"collision\"}\n",
            "{\"t\": 3.0, \"kind\": \"failed_pickup\"}\n",
        ),
    )
    .unwrap();
    let out = run(bin().args(["score", "--input"]).arg(&events));
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "8");

    fs::write(&events, "{\"t\": 0.5, \"kind\": \"drop\"}\n").unwrap();
    let out = run(bin().args(["score", "--input"]).arg(&events));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "5");
}

#[test]
fn malformed_jsonl_exits_2_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let events = dir.path().join("events.jsonl");
    fs::write(
        &events,
        "{\"t\": 1.0, \"kind\": \"drop\"}\nthis is not json\n",
    )
    .unwrap();
    let out = run(bin().args(["score", "--input"]).arg(&events));
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 2"), "stderr: {stderr}");
}

#[test]
fn unknown_event_kind_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let events = dir.path().join("events.jsonl");
    fs::write(&events, "{\"t\": 1.0, \"kind\": \"explosion\"}\n").unwrap();
    let out = run(bin().args(["score", "--input"]).arg(&events));
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_input_file_exits_2() {
    let out = run(bin().args(["score", "--input", "/nonexistent/events.jsonl"]));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn roundtrip_reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_default_config(dir.path());
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let out = run(bin()
            .args(["roundtrip", "--n", "100", "--seed", "7", "--config"])
            .arg(&config));
        assert!(
            out.status.success(),
            "stderr: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        outputs.push(out.stdout);
    }
    assert_eq!(outputs[0], outputs[1]);
    let text = String::from_utf8_lossy(&outputs[0]);
    assert!(text.contains("result: PASS"), "{text}");
}

#[test]
fn fk_output_matches_library_forward_pass() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = write_default_config(dir.path());
    // Handle at the origin with identity orientation; RCM of the default
    // config offset so the pass is well-defined.
    let out = run(bin()
        .args(["fk", "--config"])
        .arg(&config_path)
        .args(["--pos", "0.0,0.05,0.05"]));
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let parsed: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();

    let config = HarnessConfig::from_path(&config_path).unwrap();
    let handle = wristkin::se3::Pose::from_translation(Vector3::new(0.0, 0.05, 0.05));
    let (tip, state) = tool_tip_pose(
        &handle,
        &config.rcm_config().position,
        &config.geometry().unwrap(),
    )
    .unwrap();
    let tip_pos = parsed["tip_pos_m"].as_array().unwrap();
    for (i, v) in tip_pos.iter().enumerate() {
        assert!((v.as_f64().unwrap() - tip.translation[i]).abs() < 1e-12);
    }
    assert!(
        (parsed["theta1_deg"].as_f64().unwrap() - state.theta1.to_degrees()).abs() < 1e-9
    );
}

#[test]
fn fk_unreachable_pose_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_default_config(dir.path());
    // Handle a meter away from the RCM: triangle inequality violated.
    let out = run(bin()
        .args(["fk", "--config"])
        .arg(&config)
        .args(["--pos", "0.0,0.0,-1.0"]));
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn ik_solves_a_forward_generated_target() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = write_default_config(dir.path());
    let config = HarnessConfig::from_path(&config_path).unwrap();
    let geom = config.geometry().unwrap();
    let rcm = config.rcm_config().position;

    // Target from a valid forward pass with both bends near neutral (an
    // identity-oriented handle here has theta2 = 0).
    let handle = wristkin::se3::Pose::from_translation(Vector3::new(-0.05, 0.0, 0.05));
    let (tip, state) = tool_tip_pose(&handle, &rcm, &geom).unwrap();
    assert!(state.theta2 < 1e-9 && state.theta1.abs() < 1e-9);
    let quat = tip.rotation.to_quaternion_wxyz();
    let out = run(bin()
        .args(["ik", "--config"])
        .arg(&config_path)
        .args([
            "--pos",
            &format!(
                "{},{},{}",
                tip.translation.x, tip.translation.y, tip.translation.z
            ),
            "--quat",
            &format!("{},{},{},{}", quat[0], quat[1], quat[2], quat[3]),
        ]));
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let parsed: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(parsed["status"], "converged");
    assert!(parsed["position_error_m"].as_f64().unwrap() < 1e-6);
}

#[test]
fn gen_peg_then_replay_produces_commands_and_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("config.json");
    fs::copy(
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/pegboard.json"),
        &config_path,
    )
    .unwrap();
    let traj = dir.path().join("traj.jsonl");
    let commands_path = dir.path().join("commands.jsonl");
    let metrics_path = dir.path().join("metrics.json");

    let out = run(bin()
        .args(["gen-peg", "--samples-per-segment", "4", "--output"])
        .arg(&traj)
        .args(["--tip-quat", "0,0,1,0"]));
    assert!(out.status.success());
    let samples: Vec<TrajectoryRecord> =
        read_jsonl(fs::File::open(&traj).map(std::io::BufReader::new).unwrap(), "traj").unwrap();
    assert!(!samples.is_empty());

    let out = run(bin()
        .args(["replay", "--config"])
        .arg(&config_path)
        .arg("--input")
        .arg(&traj)
        .arg("--output")
        .arg(&commands_path)
        .arg("--metrics")
        .arg(&metrics_path));
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let commands: Vec<CommandRecord> = read_jsonl(
        fs::File::open(&commands_path)
            .map(std::io::BufReader::new)
            .unwrap(),
        "commands",
    )
    .unwrap();
    assert_eq!(commands.len(), samples.len());
    let metrics: MetricsRecord =
        serde_json::from_str(&fs::read_to_string(&metrics_path).unwrap()).unwrap();
    assert_eq!(metrics.samples, samples.len() as u64);
    assert!(metrics.max_rcm_dist_m < 1e-4);
}

#[test]
fn broken_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    fs::write(&config, "{ not json").unwrap();
    let out = run(bin()
        .args(["fk", "--config"])
        .arg(&config)
        .args(["--pos", "0,0,0"]));
    assert_eq!(out.status.code(), Some(2));
}
