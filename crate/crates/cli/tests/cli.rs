use std::io::{BufRead, BufReader};
use std::path::Path;
use std::process::{Command, Output, Stdio};
use std::time::Duration;

use cine_core::agent::StepLog;
use cine_core::harness::parse_table_csv;
use cine_hitl::{StepStatus, StepView};
use serde_json::json;

fn cli() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_cine-rl"));
    c.env_remove("CINE_RL_LOG_DIR");
    c
}

fn run(cmd: &mut Command) -> Output {
    let out = cmd.output().unwrap();
    assert!(
        out.status.success(),
        "{:?} failed: {}",
        cmd,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn train(out: &Path, extra: &[&str]) -> Output {
    run(cli()
        .args(["train", "--episodes", "12", "--seed", "4", "--eval-episodes", "2", "--out"])
        .arg(out)
        .args(extra))
}

fn read_logs(path: &Path) -> Vec<StepLog> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn train_writes_the_run_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let out = train(tmp.path(), &["--eval-routes", "train,test1"]);
    for f in ["config.json", "curve.csv", "table.csv", "table.txt", "checkpoint.bin", "episodes.jsonl"] {
        assert!(tmp.path().join(f).is_file(), "missing {f}");
    }
    let table = parse_table_csv(&std::fs::read_to_string(tmp.path().join("table.csv")).unwrap()).unwrap();
    assert_eq!(table.policies, ["trained", "random", "back"]);
    assert_eq!(table.routes, ["blockworld/train", "blockworld/test1"]);
    assert!(String::from_utf8(out.stdout).unwrap().contains("blockworld/test1"));

    let logs = read_logs(&tmp.path().join("episodes.jsonl"));
    assert_eq!(logs.last().unwrap().episode, 11);
    assert!(logs.iter().all(|l| l.reward_source == "handcrafted" && l.reward == l.breakdown.r));
    // Buffer passes run after episodes 10 only.
    assert_eq!(logs.iter().filter(|l| l.loss.is_some()).count(), 1);

    let config: serde_json::Value =
        serde_json::from_slice(&std::fs::read(tmp.path().join("config.json")).unwrap()).unwrap();
    assert_eq!(config["train"]["episodes"], 12);
    assert_eq!(config["train"]["seed"], 4);

    let curve = std::fs::read_to_string(tmp.path().join("curve.csv")).unwrap();
    assert_eq!(curve.lines().next().unwrap(), "bucket,first_episode,last_episode,mean_reward");
    assert_eq!(curve.lines().count(), 2);
}

#[test]
fn log_dir_variable_moves_episode_logs() {
    let tmp = tempfile::tempdir().unwrap();
    let (out, logs) = (tmp.path().join("run"), tmp.path().join("logs"));
    run(cli()
        .args(["train", "--episodes", "2", "--eval-episodes", "1", "--out"])
        .arg(&out)
        .env("CINE_RL_LOG_DIR", &logs));
    assert!(logs.join("episodes.jsonl").is_file());
    assert!(!out.join("episodes.jsonl").exists());
    assert!(out.join("checkpoint.bin").is_file());
}

#[test]
fn config_file_overrides_defaults_and_flags_override_it() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"train": {"episodes": 3, "seed": 9, "lanes": {"map": [32], "shot": [16], "count": [8], "fusion": [64], "actions": 4}}}"#,
    )
    .unwrap();
    let out = tmp.path().join("run");
    run(cli()
        .args(["train", "--eval-episodes", "1", "--seed", "1", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out));
    let written: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("config.json")).unwrap()).unwrap();
    assert_eq!(written["train"]["episodes"], 3);
    assert_eq!(written["train"]["seed"], 1);
    assert_eq!(written["train"]["lanes"]["map"], json!([32]));
}

#[test]
fn eval_and_probe_read_a_checkpoint() {
    let tmp = tempfile::tempdir().unwrap();
    let run_dir = tmp.path().join("run");
    train(&run_dir, &[]);
    let ck = run_dir.join("checkpoint.bin");
    let eval_dir = tmp.path().join("eval");
    let out = run(cli()
        .args(["eval", "--episodes", "2", "--routes", "train,test2", "--baselines", "random,fixed:left", "--checkpoint"])
        .arg(&ck)
        .arg("--out")
        .arg(&eval_dir));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("fixed[left]"));
    let table = parse_table_csv(&std::fs::read_to_string(eval_dir.join("table.csv")).unwrap()).unwrap();
    assert_eq!(table.policies.len(), 3);
    assert!(table.cells.iter().flatten().all(|c| c.is_some()));
    assert!(eval_dir.join("eval.json").is_file());

    let report = tmp.path().join("probe.json");
    let out = cli().args(["probe", "--checkpoint"]).arg(&ck).arg("--out").arg(&report).output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS") || l.starts_with("FAIL")).count(), 4);
    assert_eq!(out.status.success(), !text.contains("FAIL"));
    assert!(report.is_file());
}

#[test]
fn generated_world_file_trains_and_mismatched_scale_is_refused() {
    let tmp = tempfile::tempdir().unwrap();
    let pgm = tmp.path().join("maps/pillars.pgm");
    run(cli().args(["gen-world", "--kind", "bigmap:pillars", "--seed", "5", "--out"]).arg(&pgm));
    assert!(pgm.is_file() && pgm.with_extension("json").is_file());
    let raw = std::fs::read(&pgm).unwrap();
    assert!(raw.starts_with(b"P5\n"));

    let run_dir = tmp.path().join("run");
    run(cli()
        .args(["train", "--route", "main", "--episodes", "2", "--eval-episodes", "1", "--world"])
        .arg(&pgm)
        .arg("--out")
        .arg(&run_dir));

    let cfg = tmp.path().join("tall.json");
    std::fs::write(&cfg, r#"{"world_gen": {"max_obstacle_height": 30.0}}"#).unwrap();
    let out = cli()
        .args(["eval", "--world", "blockworld", "--routes", "train", "--episodes", "1", "--checkpoint"])
        .arg(run_dir.join("checkpoint.bin"))
        .arg("--config")
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("height scale"));
}

#[test]
fn bad_arguments_fail() {
    let tmp = tempfile::tempdir().unwrap();
    for args in [
        vec!["train", "--reward", "applause"],
        vec!["train", "--world", "moon"],
        vec!["gen-world", "--kind", "bigmap:volcano"],
    ] {
        let out = cli().args(&args).arg("--out").arg(tmp.path().join("x")).output().unwrap();
        assert!(!out.status.success(), "{args:?} should fail");
    }
}

/// `serve` with a scripted rater that answers every step with three stars.
#[test]
fn serve_trains_on_posted_ratings() {
    let tmp = tempfile::tempdir().unwrap();
    let mut child = cli()
        .args(["serve", "--episodes", "3", "--eval-episodes", "1", "--port", "0", "--out"])
        .arg(tmp.path())
        .stdout(Stdio::null())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut stderr = BufReader::new(child.stderr.take().unwrap());
    let mut line = String::new();
    let url = loop {
        line.clear();
        assert!(stderr.read_line(&mut line).unwrap() > 0, "server never announced itself");
        if let Some(u) = line.trim().strip_prefix("rating service at ") {
            break u.to_string();
        }
    };
    let client = reqwest::blocking::Client::builder()
        .timeout(Duration::from_secs(30))
        .build()
        .unwrap();
    let mut last = 0;
    let mut rated = 0;
    loop {
        let view: StepView = match client.get(format!("{url}/api/step?after={last}&wait_ms=1000")).send() {
            Ok(r) => r.json().unwrap(),
            // Server gone: training finished.
            Err(_) => break,
        };
        match (view.status, view.step) {
            (StepStatus::Finished, _) => break,
            (StepStatus::Open, Some(step)) if step.step_id > last => {
                assert_eq!(step.local_map.len(), 576);
                let resp = client
                    .post(format!("{url}/api/rating"))
                    .json(&json!({"step_id": step.step_id, "stars": 3, "rater_id": "t"}))
                    .send()
                    .unwrap();
                assert!(resp.status().is_success());
                last = step.step_id;
                rated += 1;
            }
            _ => {}
        }
    }
    assert!(child.wait().unwrap().success());
    let logs = read_logs(&tmp.path().join("episodes.jsonl"));
    assert_eq!(logs.len(), rated);
    assert!(logs.iter().all(|l| l.reward == 0.25 && l.reward_source == "human"));
    let ratings = std::fs::read_to_string(tmp.path().join("ratings.jsonl")).unwrap();
    assert_eq!(ratings.lines().count(), rated);
}
