mod common;

use std::sync::Arc;

use cine_hitl::{spawn_server, RatingDesk, StepStatus, StepView};
use common::snapshot;
use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde_json::{json, Value};

fn server() -> (Arc<RatingDesk>, cine_hitl::ServerHandle, Client) {
    let desk = Arc::new(RatingDesk::new(None));
    let handle = spawn_server(desk.clone(), "127.0.0.1:0".parse().unwrap(), None).unwrap();
    (desk, handle, Client::new())
}

#[test]
fn step_endpoint_reflects_the_desk() {
    let (desk, srv, client) = server();
    let idle: StepView = client.get(format!("{}/api/step", srv.url())).send().unwrap().json().unwrap();
    assert_eq!(idle.status, StepStatus::Idle);
    assert!(idle.step.is_none());

    let snap = snapshot(1);
    desk.publish_step(snap.clone()).unwrap();
    let open: StepView = client.get(format!("{}/api/step", srv.url())).send().unwrap().json().unwrap();
    assert_eq!(open.status, StepStatus::Open);
    assert_eq!(open.step.unwrap(), snap);
}

#[test]
fn rating_status_codes() {
    let (desk, srv, client) = server();
    desk.publish_step(snapshot(7)).unwrap();
    let url = format!("{}/api/rating", srv.url());

    let stale = client.post(&url).json(&json!({"step_id": 6, "stars": 4, "rater_id": "a"})).send().unwrap();
    assert_eq!(stale.status(), StatusCode::CONFLICT);
    let body: Value = stale.json().unwrap();
    assert_eq!(body, json!({"error": "stale_step", "current_step_id": 7}));

    let bad = client.post(&url).json(&json!({"step_id": 7, "stars": 9, "rater_id": "a"})).send().unwrap();
    assert_eq!(bad.status(), StatusCode::UNPROCESSABLE_ENTITY);

    let ok = client.post(&url).json(&json!({"step_id": 7, "stars": 5, "rater_id": "a"})).send().unwrap();
    assert_eq!(ok.status(), StatusCode::OK);
    let ack: Value = ok.json().unwrap();
    assert_eq!(ack, json!({"step_id": 7, "stars": 5, "reward": 1.0}));
    assert_eq!(desk.await_rating(7).unwrap(), 1.0);

    let dup = client.post(&url).json(&json!({"step_id": 7, "stars": 1, "rater_id": "b"})).send().unwrap();
    assert_eq!(dup.status(), StatusCode::CONFLICT);
}

#[test]
fn long_poll_returns_new_step() {
    let (desk, srv, client) = server();
    let url = format!("{}/api/step?after=0&wait_ms=5000", srv.url());
    let poll = std::thread::spawn(move || client.get(url).send().unwrap().json::<StepView>().unwrap());
    std::thread::sleep(std::time::Duration::from_millis(100));
    desk.publish_step(snapshot(1)).unwrap();
    let view = poll.join().unwrap();
    assert_eq!(view.step.unwrap().step_id, 1);
}

#[test]
fn progress_buckets_match_the_server_curve() {
    let (desk, srv, client) = server();
    for i in 0..45 {
        desk.record_episode(if i < 30 { 1.0 } else { 0.5 });
    }
    let p: Value = client.get(format!("{}/api/progress", srv.url())).send().unwrap().json().unwrap();
    assert_eq!(p["episodes_completed"], 45);
    assert_eq!(p["curve"][0]["mean_reward"], 1.0);
    assert_eq!(p["curve"][1]["mean_reward"], 0.5);
    assert_eq!(p["bucket_size"], 30);
}

#[test]
fn static_ui_is_served() {
    let dir = std::env::temp_dir().join(format!("cine-hitl-ui-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(dir.join("index.html"), "<title>rate</title>").unwrap();
    let desk = Arc::new(RatingDesk::new(None));
    let srv = spawn_server(desk, "127.0.0.1:0".parse().unwrap(), Some(dir.clone())).unwrap();
    let body = reqwest::blocking::get(format!("{}/", srv.url())).unwrap().text().unwrap();
    assert!(body.contains("rate"));
    drop(srv);
    std::fs::remove_dir_all(dir).unwrap();
}
