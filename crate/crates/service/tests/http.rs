//! Scripted HTTP clients against a live server on a loopback port.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use reqwest::{Client, StatusCode};
use scenestat_core::stimuli::StimulusSet;
use scenestat_core::Pattern;
use scenestat_service::store::{LOG_FILE, SETS_DIR, SNAPSHOT_FILE};
use scenestat_service::{run, AggregateTable, Store};
use serde_json::{json, Value};
use tokio::net::TcpListener;
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

const SET_SIZE: u64 = 12;

fn write_set(dir: &Path, id: &str, n: u64) -> Vec<Pattern> {
    fs::create_dir_all(dir.join(SETS_DIR)).unwrap();
    let patterns: Vec<Pattern> = (0..n)
        .map(|b| Pattern::new(4, (b * 5003 + 17) % 65536).unwrap())
        .collect();
    let set = StimulusSet::new(id.into(), 4, patterns.clone(), "fixture".into(), 0).unwrap();
    fs::write(
        dir.join(SETS_DIR).join(format!("{id}.json")),
        serde_json::to_string_pretty(&set).unwrap(),
    )
    .unwrap();
    patterns
}

struct Server {
    base: String,
    stop: Option<oneshot::Sender<()>>,
    handle: JoinHandle<()>,
}

impl Server {
    async fn start(dir: &Path, static_dir: Option<&Path>) -> Server {
        let store = Arc::new(Store::open(dir, 42).unwrap());
        let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
        let base = format!("http://{}", listener.local_addr().unwrap());
        let (tx, rx) = oneshot::channel();
        let static_dir = static_dir.map(Path::to_path_buf);
        let handle = tokio::spawn(async move {
            run(listener, store, static_dir, async {
                let _ = rx.await;
            })
            .await
            .unwrap();
        });
        Server {
            base,
            stop: Some(tx),
            handle,
        }
    }

    async fn shutdown(mut self) {
        self.stop.take().unwrap().send(()).unwrap();
        self.handle.await.unwrap();
    }

    /// Stops serving without the clean-shutdown snapshot, as a crash would.
    async fn kill(self) {
        self.handle.abort();
        let _ = self.handle.await;
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.base, path)
    }
}

async fn create(c: &Client, s: &Server, set_id: &str) -> Value {
    let resp = c
        .post(s.url("/api/sessions"))
        .json(&json!({ "set_id": set_id, "age": 30 }))
        .send()
        .await
        .unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    resp.json().await.unwrap()
}

async fn answer(c: &Client, s: &Server, id: &str, index: u64, choice: &str, rt: u64) -> StatusCode {
    c.post(s.url(&format!("/api/sessions/{id}/responses")))
        .json(&json!({ "index": index, "choice": choice, "rt_ms": rt }))
        .send()
        .await
        .unwrap()
        .status()
}

async fn export(c: &Client, s: &Server, set_id: &str) -> AggregateTable {
    let resp = c
        .get(s.url(&format!("/api/sets/{set_id}/export")))
        .send()
        .await
        .unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    AggregateTable::from_csv(&resp.text().await.unwrap()).unwrap()
}

/// Deterministic judgment of participant `who` for a pattern.
fn judge(who: u64, pattern_hex: &str) -> &'static str {
    let bits = u64::from_str_radix(pattern_hex, 16).unwrap();
    if (bits.count_ones() as u64 + who) % 3 == 0 {
        "random"
    } else {
        "not_random"
    }
}

/// Creates a session and answers every trial; returns the session id.
async fn participate(c: &Client, s: &Server, who: u64) -> String {
    let session = create(c, s, "s1").await;
    let id = session["session_id"].as_str().unwrap().to_string();
    for t in session["trials"].as_array().unwrap() {
        let index = t["index"].as_u64().unwrap();
        let hex = t["pattern_hex"].as_str().unwrap();
        let st = answer(c, s, &id, index, judge(who, hex), 300 + index).await;
        assert_eq!(st, StatusCode::OK);
    }
    id
}

fn hand_tally(patterns: &[Pattern], who: &[u64]) -> Vec<(String, u64, u64)> {
    patterns
        .iter()
        .map(|p| {
            let hex = p.to_hex();
            let n_random = who.iter().filter(|&&w| judge(w, &hex) == "random").count() as u64;
            (hex, n_random, who.len() as u64)
        })
        .collect()
}

fn rows(t: &AggregateTable) -> Vec<(String, u64, u64)> {
    t.rows
        .iter()
        .map(|r| (r.pattern.to_hex(), r.n_random, r.n_total))
        .collect()
}

#[tokio::test]
async fn healthz_and_static_files() {
    let dir = tempfile::tempdir().unwrap();
    let web = tempfile::tempdir().unwrap();
    fs::write(web.path().join("index.html"), "<h1>experiment</h1>").unwrap();
    let s = Server::start(dir.path(), Some(web.path())).await;
    let c = Client::new();
    let v: Value = c.get(s.url("/api/healthz")).send().await.unwrap().json().await.unwrap();
    assert_eq!(v, json!({ "ok": true }));
    let page = c.get(s.url("/index.html")).send().await.unwrap();
    assert_eq!(page.status(), StatusCode::OK);
    assert_eq!(page.text().await.unwrap(), "<h1>experiment</h1>");
    s.shutdown().await;
}

#[tokio::test]
async fn scripted_sessions_match_hand_tally() {
    let dir = tempfile::tempdir().unwrap();
    let patterns = write_set(dir.path(), "s1", SET_SIZE);
    let s = Server::start(dir.path(), None).await;
    let c = Client::new();

    let empty = export(&c, &s, "s1").await;
    assert_eq!(empty.completed_sessions, 0);
    assert!(empty.rows.iter().all(|r| r.n_total == 0));

    for who in 0..3 {
        participate(&c, &s, who).await;
    }
    let t = export(&c, &s, "s1").await;
    assert_eq!(t.completed_sessions, 3);
    assert_eq!(rows(&t), hand_tally(&patterns, &[0, 1, 2]));
    let text = c
        .get(s.url("/api/sets/s1/export"))
        .send()
        .await
        .unwrap()
        .text()
        .await
        .unwrap();
    assert!(text.contains("# presentation=all self-paced"));
    s.shutdown().await;
}

#[tokio::test]
async fn abandoned_sessions_are_excluded() {
    let dir = tempfile::tempdir().unwrap();
    let patterns = write_set(dir.path(), "s1", SET_SIZE);
    let s = Server::start(dir.path(), None).await;
    let c = Client::new();
    participate(&c, &s, 5).await;
    let quitter = create(&c, &s, "s1").await;
    let qid = quitter["session_id"].as_str().unwrap();
    for index in 0..SET_SIZE - 1 {
        assert_eq!(answer(&c, &s, qid, index, "random", 10).await, StatusCode::OK);
    }
    let t = export(&c, &s, "s1").await;
    assert_eq!(t.completed_sessions, 1);
    assert_eq!(rows(&t), hand_tally(&patterns, &[5]));

    // the UI can resume the abandoned session at its first open trial
    let v: Value = c
        .get(s.url(&format!("/api/sessions/{qid}")))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(v["answered"].as_array().unwrap().len() as u64, SET_SIZE - 1);
    assert_eq!(v["completed"], json!(false));
    s.shutdown().await;
}

#[tokio::test]
async fn errors_and_idempotent_retries() {
    let dir = tempfile::tempdir().unwrap();
    write_set(dir.path(), "s1", SET_SIZE);
    let s = Server::start(dir.path(), None).await;
    let c = Client::new();
    let session = create(&c, &s, "s1").await;
    let id = session["session_id"].as_str().unwrap();
    assert_eq!(session["k"], json!(4));
    assert_eq!(session["trials"].as_array().unwrap().len() as u64, SET_SIZE);

    assert_eq!(answer(&c, &s, id, 0, "random", 250).await, StatusCode::OK);
    let log_len = fs::metadata(dir.path().join(LOG_FILE)).unwrap().len();
    assert_eq!(answer(&c, &s, id, 0, "random", 250).await, StatusCode::OK);
    assert_eq!(fs::metadata(dir.path().join(LOG_FILE)).unwrap().len(), log_len);

    let conflict = c
        .post(s.url(&format!("/api/sessions/{id}/responses")))
        .json(&json!({ "index": 0, "choice": "not_random", "rt_ms": 250 }))
        .send()
        .await
        .unwrap();
    assert_eq!(conflict.status(), StatusCode::CONFLICT);
    let body: Value = conflict.json().await.unwrap();
    assert_eq!(body["code"], json!("conflict"));
    assert!(body["message"].is_string());

    assert_eq!(
        answer(&c, &s, id, SET_SIZE, "random", 1).await,
        StatusCode::UNPROCESSABLE_ENTITY
    );
    assert_eq!(
        answer(&c, &s, id, 1, "maybe", 1).await,
        StatusCode::UNPROCESSABLE_ENTITY
    );
    assert_eq!(answer(&c, &s, "missing", 0, "random", 1).await, StatusCode::NOT_FOUND);
    let bad_body = c
        .post(s.url(&format!("/api/sessions/{id}/responses")))
        .body("{not json")
        .send()
        .await
        .unwrap();
    assert_eq!(bad_body.status(), StatusCode::UNPROCESSABLE_ENTITY);

    let unknown_set = c
        .post(s.url("/api/sessions"))
        .json(&json!({ "set_id": "nope" }))
        .send()
        .await
        .unwrap();
    assert_eq!(unknown_set.status(), StatusCode::NOT_FOUND);
    let body: Value = unknown_set.json().await.unwrap();
    assert_eq!(body["code"], json!("not_found"));
    let unknown_export = c.get(s.url("/api/sets/nope/export")).send().await.unwrap();
    assert_eq!(unknown_export.status(), StatusCode::NOT_FOUND);
    s.shutdown().await;
}

#[tokio::test]
async fn crash_recovery_keeps_every_acknowledged_response() {
    let dir = tempfile::tempdir().unwrap();
    let patterns = write_set(dir.path(), "s1", SET_SIZE);
    let c = Client::new();

    let s = Server::start(dir.path(), None).await;
    participate(&c, &s, 1).await;
    participate(&c, &s, 2).await;
    let partial = create(&c, &s, "s1").await;
    let pid = partial["session_id"].as_str().unwrap().to_string();
    for index in 0..4 {
        answer(&c, &s, &pid, index, "random", 9).await;
    }
    let before = export(&c, &s, "s1").await;
    s.kill().await;
    assert!(!dir.path().join(SNAPSHOT_FILE).exists());

    // a response whose write was cut off before it was acknowledged
    let log_path = dir.path().join(LOG_FILE);
    let intact = fs::read(&log_path).unwrap();
    let mut torn = intact.clone();
    torn.extend_from_slice(format!(r#"{{"type":"response","session_id":"{pid}","index":4,"ch"#).as_bytes());
    fs::write(&log_path, torn).unwrap();

    let s = Server::start(dir.path(), None).await;
    assert_eq!(fs::read(&log_path).unwrap(), intact);
    assert_eq!(export(&c, &s, "s1").await, before);
    assert_eq!(rows(&before), hand_tally(&patterns, &[1, 2]));
    // the interrupted trial can be answered again, completing the session
    for index in 4..SET_SIZE {
        assert_eq!(answer(&c, &s, &pid, index, "random", 9).await, StatusCode::OK);
    }
    assert_eq!(export(&c, &s, "s1").await.completed_sessions, 3);
    s.shutdown().await;
    assert!(dir.path().join(SNAPSHOT_FILE).exists());

    let s = Server::start(dir.path(), None).await;
    assert_eq!(export(&c, &s, "s1").await.completed_sessions, 3);
    s.shutdown().await;
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_participants_match_serial_replay() {
    const PARTICIPANTS: u64 = 50;
    let dir = tempfile::tempdir().unwrap();
    let patterns = write_set(dir.path(), "s1", SET_SIZE);
    let s = Arc::new(Server::start(dir.path(), None).await);
    let c = Client::new();
    let tasks: Vec<_> = (0..PARTICIPANTS)
        .map(|who| {
            let (c, s) = (c.clone(), s.clone());
            tokio::spawn(async move { participate(&c, &s, who).await })
        })
        .collect();
    let mut ids = Vec::new();
    for t in tasks {
        ids.push(t.await.unwrap());
    }
    let concurrent = export(&c, &s, "s1").await;

    // every session id is distinct and every order is a permutation
    let store = Store::open(dir.path(), 42).unwrap();
    let mut seen = BTreeMap::new();
    for id in &ids {
        let v = store.session(id).unwrap();
        assert!(v.completed);
        let mut hexes: Vec<String> = v.trials.iter().map(|t| t.pattern_hex.clone()).collect();
        hexes.sort();
        let mut expected: Vec<String> = patterns.iter().map(|p| p.to_hex()).collect();
        expected.sort();
        assert_eq!(hexes, expected);
        seen.insert(id.clone(), ());
    }
    assert_eq!(seen.len(), PARTICIPANTS as usize);
    drop(store);

    let serial_dir = tempfile::tempdir().unwrap();
    write_set(serial_dir.path(), "s1", SET_SIZE);
    let serial = Server::start(serial_dir.path(), None).await;
    for who in 0..PARTICIPANTS {
        participate(&c, &serial, who).await;
    }
    let replayed = export(&c, &serial, "s1").await;
    assert_eq!(concurrent, replayed);
    let who: Vec<u64> = (0..PARTICIPANTS).collect();
    assert_eq!(rows(&concurrent), hand_tally(&patterns, &who));

    // conservation: every completed session contributes one judgment per pattern
    let total: u64 = concurrent.rows.iter().map(|r| r.n_total).sum();
    assert_eq!(total, concurrent.completed_sessions * SET_SIZE);
    serial.shutdown().await;
    Arc::try_unwrap(s).ok().unwrap().shutdown().await;
}

#[tokio::test]
async fn bad_set_file_fails_startup() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir(dir.path().join(SETS_DIR)).unwrap();
    fs::write(dir.path().join(SETS_DIR).join("x.json"), "{\"id\": 3}").unwrap();
    assert!(Store::open(dir.path(), 1).is_err());
}
