use std::path::Path;

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use phonaudit_core::pipeline::{compile_report, AnnotationTask, BlindTask, DatasetManifest, ManifestEntry};
use phonaudit_core::{Choice, InfluentialWords, PreferenceRecord, TestConfig};
use phonaudit_service::{router, AppState, ServiceConfig};
use serde_json::{json, Value};
use tower::ServiceExt;

const AUDIO: &[u8] = b"RIFF0123456789abcdefghijklmnopqrstuvwxyz";

struct Fixture {
    dir: tempfile::TempDir,
    tasks: Vec<AnnotationTask>,
}

impl Fixture {
    fn new(n: usize) -> Self {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir_all(dir.path().join("audio")).unwrap();
        let mut entries = Vec::new();
        let mut tasks = Vec::new();
        for i in 0..n {
            let id = format!("u{i}");
            std::fs::write(dir.path().join(format!("audio/{id}.wav")), AUDIO).unwrap();
            entries.push(ManifestEntry {
                utterance_id: id.clone(),
                language_code: "eng".into(),
                audio_path: format!("audio/{id}.wav"),
                gold_transcript: "ðə kæt".into(),
                duration_s: 2.0,
            });
            tasks.push(AnnotationTask {
                task_id: format!("eng-{:03}", i + 1),
                language_code: "eng".into(),
                utterance_id: id,
                audio_path: format!("audio/u{i}.wav"),
                transcript_a: "ðə kæt".into(),
                transcript_b: "də kat sat".into(),
                a_is_gold: i % 2 == 0,
                model_id: "secret-model".into(),
            });
        }
        DatasetManifest::new(entries).unwrap().save(dir.path().join("manifest.jsonl")).unwrap();
        Self { dir, tasks }
    }

    fn app(&self) -> Router {
        let config = ServiceConfig {
            data_dir: self.dir.path().join("data"),
            manifest: Some(self.dir.path().join("manifest.jsonl")),
            audio_root: None,
        };
        router(AppState::open(&config).unwrap())
    }

    fn blind(&self) -> Vec<BlindTask> {
        self.tasks.iter().map(|t| t.split().0).collect()
    }

    fn data(&self) -> &Path {
        self.dir.path()
    }
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header(header::CONTENT_TYPE, "application/json");
            Body::from(serde_json::to_vec(&v).unwrap())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
}

async fn json_call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let (s, b) = call(app, method, uri, body).await;
    (s, serde_json::from_slice(&b).unwrap_or(Value::Null))
}

async fn start(app: &Router, fx: &Fixture) {
    let (s, _) = json_call(
        app,
        Method::POST,
        "/campaign",
        Some(json!({"session_id": "s1", "annotator_id": "ann", "tasks": fx.blind()})),
    )
    .await;
    assert_eq!(s, StatusCode::OK);
}

fn record(task: &str, choice: &str) -> Value {
    json!({"task_id": task, "annotator_id": "ann", "choice": choice, "playback_speed_used": [1.0]})
}

fn scan_for_secrets(v: &Value, path: &str) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                assert!(k != "a_is_gold" && k != "model_id", "{path}.{k} leaks the resolution");
                scan_for_secrets(x, &format!("{path}.{k}"));
            }
        }
        Value::Array(a) => a.iter().for_each(|x| scan_for_secrets(x, path)),
        Value::String(s) => assert!(!s.contains("secret-model"), "{path} leaks the model id"),
        _ => {}
    }
}

#[tokio::test]
async fn fresh_session_walkthrough_and_completion() {
    let fx = Fixture::new(3);
    let app = fx.app();
    start(&app, &fx).await;

    let (s, next) = json_call(&app, Method::GET, "/session/s1/next", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(next["index"], 0);
    assert_eq!(next["task"]["task_id"], "eng-001");
    assert!(next["record"].is_null());

    for (i, t) in ["eng-001", "eng-002", "eng-003"].iter().enumerate() {
        let (s, ack) = json_call(&app, Method::POST, "/session/s1/submit", Some(record(t, "prefer_a"))).await;
        assert_eq!(s, StatusCode::OK, "{ack}");
        assert_eq!(ack["cursor"], i + 1);
        assert_eq!(ack["stored"], true);
    }
    let (s, err) = json_call(&app, Method::GET, "/session/s1/next", None).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(err["error"], "session_complete");
    let (_, p) = json_call(&app, Method::GET, "/session/s1/progress", None).await;
    assert_eq!((p["completed"].as_u64(), p["complete"].as_bool()), (Some(3), Some(true)));
}

#[tokio::test]
async fn invalid_unknown_and_stale_submissions() {
    let fx = Fixture::new(3);
    let app = fx.app();
    start(&app, &fx).await;

    let mut bad = record("eng-001", "tie_good");
    bad["influential_words"] = json!({"a": [0], "b": []});
    let (s, e) = json_call(&app, Method::POST, "/session/s1/submit", Some(bad)).await;
    assert_eq!((s, e["error"].as_str()), (StatusCode::UNPROCESSABLE_ENTITY, Some("invalid_choice")));

    let mut out_of_range = record("eng-001", "prefer_b");
    out_of_range["influential_words"] = json!({"a": [], "b": [3]});
    let (s, _) = json_call(&app, Method::POST, "/session/s1/submit", Some(out_of_range)).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);

    let (s, e) = json_call(&app, Method::POST, "/session/s1/submit", Some(record("eng-999", "prefer_a"))).await;
    assert_eq!((s, e["error"].as_str()), (StatusCode::NOT_FOUND, Some("unknown_task")));

    let (s, e) = json_call(&app, Method::POST, "/session/s1/submit", Some(record("eng-003", "prefer_a"))).await;
    assert_eq!((s, e["error"].as_str()), (StatusCode::CONFLICT, Some("stale_session")));

    let (s, e) = json_call(&app, Method::GET, "/session/s1/next?index=2", None).await;
    assert_eq!((s, e["error"].as_str()), (StatusCode::CONFLICT, Some("stale_session")));

    let (s, _) = json_call(&app, Method::GET, "/session/nope/next", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);

    // nothing was stored by the rejected calls
    let (_, p) = json_call(&app, Method::GET, "/session/s1/progress", None).await;
    assert_eq!(p["completed"], 0);
}

#[tokio::test]
async fn back_navigation_overwrites_without_moving_cursor() {
    let fx = Fixture::new(3);
    let app = fx.app();
    start(&app, &fx).await;
    let mut first = record("eng-001", "prefer_a");
    first["influential_words"] = json!({"a": [1], "b": []});
    json_call(&app, Method::POST, "/session/s1/submit", Some(first)).await;
    json_call(&app, Method::POST, "/session/s1/submit", Some(record("eng-002", "tie_poor"))).await;

    let (_, back) = json_call(&app, Method::GET, "/session/s1/next?index=0", None).await;
    assert_eq!(back["record"]["choice"], "prefer_a");
    assert_eq!(back["record"]["influential_words"]["a"], json!([1]));

    let (_, ack) = json_call(&app, Method::POST, "/session/s1/submit", Some(record("eng-001", "prefer_b"))).await;
    assert_eq!((ack["cursor"].as_u64(), ack["stored"].as_bool()), (Some(2), Some(true)));
    let (_, again) = json_call(&app, Method::GET, "/session/s1/next?index=0", None).await;
    assert_eq!(again["record"]["choice"], "prefer_b");
    let (_, cur) = json_call(&app, Method::GET, "/session/s1/next", None).await;
    assert_eq!(cur["task"]["task_id"], "eng-003");

    let (_, body) = call(&app, Method::GET, "/session/s1/records", None).await;
    let text = String::from_utf8(body).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().next().unwrap().contains("prefer_b"));
}

#[tokio::test]
async fn identical_resubmission_is_stored_once() {
    let fx = Fixture::new(2);
    let app = fx.app();
    start(&app, &fx).await;
    let (_, a) = json_call(&app, Method::POST, "/session/s1/submit", Some(record("eng-001", "prefer_a"))).await;
    let (_, b) = json_call(&app, Method::POST, "/session/s1/submit", Some(record("eng-001", "prefer_a"))).await;
    assert_eq!((a["stored"].as_bool(), b["stored"].as_bool()), (Some(true), Some(false)));
    let log = std::fs::read_to_string(fx.data().join("data/sessions/s1/records.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 1);
}

#[tokio::test]
async fn acknowledged_records_survive_restart() {
    let fx = Fixture::new(4);
    {
        let app = fx.app();
        start(&app, &fx).await;
        for t in ["eng-001", "eng-002"] {
            let (s, _) = json_call(&app, Method::POST, "/session/s1/submit", Some(record(t, "prefer_b"))).await;
            assert_eq!(s, StatusCode::OK);
        }
    }
    // simulate a crash mid-write of an unacknowledged record
    let log = fx.data().join("data/sessions/s1/records.jsonl");
    let mut text = std::fs::read_to_string(&log).unwrap();
    text.push_str(r#"{"task_id":"eng-003","annot"#);
    std::fs::write(&log, text).unwrap();

    let app = fx.app();
    let (_, next) = json_call(&app, Method::GET, "/session/s1/next", None).await;
    assert_eq!(next["task"]["task_id"], "eng-003");
    let (_, p) = json_call(&app, Method::GET, "/session/s1/progress", None).await;
    assert_eq!((p["completed"].as_u64(), p["cursor"].as_u64()), (Some(2), Some(2)));
    let (s, _) = json_call(&app, Method::POST, "/session/s1/submit", Some(record("eng-003", "tie_good"))).await;
    assert_eq!(s, StatusCode::OK);

    let app = fx.app();
    let (_, body) = call(&app, Method::GET, "/session/s1/records", None).await;
    assert_eq!(String::from_utf8(body).unwrap().lines().count(), 3);

    // re-posting the same campaign resumes rather than resetting
    start(&app, &fx).await;
    let (_, p) = json_call(&app, Method::GET, "/session/s1/progress", None).await;
    assert_eq!(p["cursor"], 3);
}

#[tokio::test]
async fn campaign_conflicts_and_blind_input() {
    let fx = Fixture::new(2);
    let app = fx.app();
    start(&app, &fx).await;
    let (s, _) = json_call(
        &app,
        Method::POST,
        "/campaign",
        Some(json!({"session_id": "s1", "annotator_id": "ann", "tasks": &fx.blind()[..1]})),
    )
    .await;
    assert_eq!(s, StatusCode::CONFLICT);
    // a task list that still carries the key is rejected
    let (s, _) = json_call(
        &app,
        Method::POST,
        "/campaign",
        Some(json!({"session_id": "s2", "annotator_id": "ann", "tasks": fx.tasks})),
    )
    .await;
    assert!(s.is_client_error());
    let (s, _) = json_call(
        &app,
        Method::POST,
        "/campaign",
        Some(json!({"session_id": "../x", "annotator_id": "ann", "tasks": fx.blind()})),
    )
    .await;
    assert_eq!(s, StatusCode::BAD_REQUEST);

    // loading from a task file on the server
    let path = fx.data().join("tasks.jsonl");
    phonaudit_core::pipeline::write_task_files(&fx.tasks, &path, &fx.data().join("key.jsonl")).unwrap();
    let (s, p) = json_call(
        &app,
        Method::POST,
        "/campaign",
        Some(json!({"session_id": "s3", "annotator_id": "ann", "tasks_file": path})),
    )
    .await;
    assert_eq!((s, p["total"].as_u64()), (StatusCode::OK, Some(2)));
}

#[tokio::test]
async fn audio_full_range_and_missing() {
    let fx = Fixture::new(1);
    let app = fx.app();
    let (s, body) = call(&app, Method::GET, "/audio/u0", None).await;
    assert_eq!((s, body.as_slice()), (StatusCode::OK, AUDIO));

    let req = Request::get("/audio/u0").header(header::RANGE, "bytes=4-9").body(Body::empty()).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    assert_eq!(resp.status(), StatusCode::PARTIAL_CONTENT);
    assert_eq!(resp.headers()[header::CONTENT_RANGE], format!("bytes 4-9/{}", AUDIO.len()).as_str());
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    assert_eq!(&bytes[..], &AUDIO[4..10]);

    let (s, _) = call(&app, Method::GET, "/audio/nope", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

/// Five-task session driven through every endpoint; every JSON body is
/// scanned for resolution fields and the records feed the report.
#[tokio::test]
async fn blind_round_trip_feeds_the_report() {
    let fx = Fixture::new(5);
    let app = fx.app();
    let mut seen = Vec::new();
    let (_, v) = json_call(
        &app,
        Method::POST,
        "/campaign",
        Some(json!({"session_id": "s1", "annotator_id": "ann", "tasks": fx.blind()})),
    )
    .await;
    seen.push(v);
    let choices = ["prefer_a", "prefer_b", "tie_good", "prefer_a", "tie_poor"];
    for (i, c) in choices.iter().enumerate() {
        let (_, next) = json_call(&app, Method::GET, "/session/s1/next", None).await;
        let task_id = next["task"]["task_id"].as_str().unwrap().to_string();
        seen.push(next);
        let mut r = record(&task_id, c);
        if c.starts_with("prefer") {
            r["influential_words"] = json!({"a": [0], "b": [1, 2]});
        }
        let (_, ack) = json_call(&app, Method::POST, "/session/s1/submit", Some(r)).await;
        seen.push(ack);
        let (_, back) = json_call(&app, Method::GET, &format!("/session/s1/next?index={i}"), None).await;
        seen.push(back);
        let (_, p) = json_call(&app, Method::GET, "/session/s1/progress", None).await;
        seen.push(p);
    }
    let (_, done) = json_call(&app, Method::GET, "/session/s1/next", None).await;
    seen.push(done);
    let (_, body) = call(&app, Method::GET, "/session/s1/records", None).await;
    let text = String::from_utf8(body).unwrap();
    for line in text.lines() {
        seen.push(serde_json::from_str(line).unwrap());
    }
    for v in &seen {
        scan_for_secrets(v, "$");
    }

    let records: Vec<PreferenceRecord> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(records.len(), 5);
    assert!(records.iter().all(|r| r.timestamp.is_some()));
    assert_eq!(records[0].influential_words, InfluentialWords { a: vec![0], b: vec![1, 2] });
    assert_eq!(records[4].choice, Choice::TiePoor);
    let cfg = TestConfig { n_trials: 5, min_decided: 3, ..TestConfig::default() };
    let report = compile_report(&fx.tasks, &records, &cfg).unwrap();
    let eng = &report.languages["eng"];
    // tasks alternate a_is_gold starting with true: A gold, B gold, tie, A model, tie
    assert_eq!(eng.counts.gold_preferred, 2);
    assert_eq!(eng.counts.model_preferred, 1);
    assert_eq!(eng.counts.abstentions(), 2);
}
