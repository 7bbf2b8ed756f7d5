//! Session state backed by an append-only JSONL event log.
//!
//! Every mutation is written as one newline-terminated JSON record and synced
//! to disk before it is applied in memory, so an acknowledged request is
//! always recoverable. On open, a trailing record without its newline is the
//! remains of an interrupted write; it is discarded and the log truncated.
//! A clean shutdown also writes `snapshot.json`, which records how much of the
//! log it covers so reopening only replays the tail.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use scenestat_core::stimuli::StimulusSet;
use scenestat_core::{rng, Pattern};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::export::AggregateTable;

pub const LOG_FILE: &str = "events.jsonl";
pub const SNAPSHOT_FILE: &str = "snapshot.json";
pub const SETS_DIR: &str = "sets";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("data directory {0} does not exist or is not a directory")]
    MissingDataDir(PathBuf),
    #[error("stimulus set {path}: {message}")]
    BadSet { path: PathBuf, message: String },
    #[error("event log line {line}: {message}")]
    Corrupt { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Request-level failures; each maps to one HTTP status.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum RequestError {
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    Conflict(String),
    #[error("{0}")]
    Validation(String),
    #[error("storage failure: {0}")]
    Storage(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Choice {
    Random,
    NotRandom,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Response {
    pub choice: Choice,
    pub rt_ms: u64,
    pub received_at_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub set_id: String,
    pub age: Option<u32>,
    pub gender: Option<String>,
    /// `order[i]` is the set position shown at trial `i`.
    pub order: Vec<usize>,
    pub created_at_ms: u64,
    pub responses: Vec<Option<Response>>,
}

impl Session {
    pub fn answered(&self) -> usize {
        self.responses.iter().filter(|r| r.is_some()).count()
    }

    pub fn is_complete(&self) -> bool {
        self.responses.iter().all(|r| r.is_some())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Event {
    SessionCreated {
        session_id: String,
        set_id: String,
        counter: u64,
        age: Option<u32>,
        gender: Option<String>,
        order: Vec<usize>,
        created_at_ms: u64,
    },
    Response {
        session_id: String,
        index: usize,
        choice: Choice,
        rt_ms: u64,
        received_at_ms: u64,
    },
}

#[derive(Serialize, Deserialize)]
struct Snapshot {
    log_len: u64,
    counter: u64,
    sessions: Vec<Session>,
}

/// Participant details supplied when a session starts.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParticipantMeta {
    pub age: Option<u32>,
    pub gender: Option<String>,
}

/// A session as shown to its participant: trials in presentation order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub set_id: String,
    pub k: usize,
    pub trials: Vec<Trial>,
    pub answered: Vec<usize>,
    pub completed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trial {
    pub index: usize,
    pub pattern_hex: String,
}

const MAX_GENDER_LEN: usize = 200;
const MAX_AGE: u32 = 150;

struct Inner {
    log: File,
    log_len: u64,
    counter: u64,
    sessions: HashMap<String, Session>,
}

pub struct Store {
    dir: PathBuf,
    master_seed: u64,
    sets: BTreeMap<String, StimulusSet>,
    inner: Mutex<Inner>,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

/// Loads every `*.json` stimulus set in `dir`, in file-name order. Run
/// manifests (`*.manifest.json`) written next to sets are skipped.
fn load_sets(dir: &Path) -> Result<BTreeMap<String, StimulusSet>, StoreError> {
    let mut sets = BTreeMap::new();
    if !dir.is_dir() {
        return Ok(sets);
    }
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()?;
    paths.retain(|p| {
        let name = p.file_name().unwrap_or_default().to_string_lossy();
        name.ends_with(".json") && !name.ends_with(".manifest.json")
    });
    paths.sort();
    for path in paths {
        let text = fs::read_to_string(&path)?;
        let set: StimulusSet = serde_json::from_str(&text).map_err(|e| StoreError::BadSet {
            path: path.clone(),
            message: e.to_string(),
        })?;
        if set.is_empty() {
            return Err(StoreError::BadSet {
                path,
                message: "set has no patterns".into(),
            });
        }
        if sets.contains_key(&set.id) {
            return Err(StoreError::BadSet {
                path,
                message: format!("duplicate set id {:?}", set.id),
            });
        }
        sets.insert(set.id.clone(), set);
    }
    Ok(sets)
}

/// Reads the log, truncating an unterminated final record. Returns the
/// complete lines with their 1-based line numbers and the retained length.
fn read_log(path: &Path) -> Result<(Vec<(usize, String)>, u64), StoreError> {
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == io::ErrorKind::NotFound => Vec::new(),
        Err(e) => return Err(e.into()),
    };
    let keep = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    if keep < bytes.len() {
        let f = OpenOptions::new().write(true).open(path)?;
        f.set_len(keep as u64)?;
        f.sync_all()?;
    }
    let mut lines = Vec::new();
    let mut offset = 0usize;
    for (i, raw) in bytes[..keep].split(|&b| b == b'\n').enumerate() {
        if offset >= keep {
            break;
        }
        offset += raw.len() + 1;
        let text = String::from_utf8(raw.to_vec()).map_err(|_| StoreError::Corrupt {
            line: i + 1,
            message: "invalid UTF-8".into(),
        })?;
        lines.push((i + 1, text));
    }
    Ok((lines, keep as u64))
}

impl Inner {
    fn apply(&mut self, sets: &BTreeMap<String, StimulusSet>, ev: Event) -> Result<(), String> {
        match ev {
            Event::SessionCreated {
                session_id,
                set_id,
                counter,
                age,
                gender,
                order,
                created_at_ms,
            } => {
                let set = sets
                    .get(&set_id)
                    .ok_or_else(|| format!("unknown set {set_id:?}"))?;
                let mut sorted = order.clone();
                sorted.sort_unstable();
                if !sorted.iter().copied().eq(0..set.len()) {
                    return Err("order is not a permutation of the set".into());
                }
                if self.sessions.contains_key(&session_id) {
                    return Err(format!("session {session_id} created twice"));
                }
                self.counter = self.counter.max(counter + 1);
                let n = order.len();
                self.sessions.insert(
                    session_id.clone(),
                    Session {
                        id: session_id,
                        set_id,
                        age,
                        gender,
                        order,
                        created_at_ms,
                        responses: vec![None; n],
                    },
                );
            }
            Event::Response {
                session_id,
                index,
                choice,
                rt_ms,
                received_at_ms,
            } => {
                let s = self
                    .sessions
                    .get_mut(&session_id)
                    .ok_or_else(|| format!("response for unknown session {session_id}"))?;
                let slot = s
                    .responses
                    .get_mut(index)
                    .ok_or_else(|| format!("trial {index} out of range"))?;
                if slot.is_some() {
                    return Err(format!("trial {index} of {session_id} answered twice"));
                }
                *slot = Some(Response {
                    choice,
                    rt_ms,
                    received_at_ms,
                });
            }
        }
        Ok(())
    }

    /// Appends and syncs one record, rolling the file back on failure so the
    /// log never holds a torn line followed by later records.
    fn append(&mut self, ev: &Event) -> Result<(), RequestError> {
        let mut line = serde_json::to_vec(ev).expect("events serialize");
        line.push(b'\n');
        let res = self
            .log
            .write_all(&line)
            .and_then(|_| self.log.sync_data());
        match res {
            Ok(()) => {
                self.log_len += line.len() as u64;
                Ok(())
            }
            Err(e) => {
                let _ = self.log.set_len(self.log_len);
                Err(RequestError::Storage(e.to_string()))
            }
        }
    }
}

impl Store {
    /// Opens or initializes the store in `dir`, which must already exist.
    pub fn open(dir: impl AsRef<Path>, master_seed: u64) -> Result<Store, StoreError> {
        let dir = dir.as_ref().to_path_buf();
        if !dir.is_dir() {
            return Err(StoreError::MissingDataDir(dir));
        }
        let sets = load_sets(&dir.join(SETS_DIR))?;
        let log_path = dir.join(LOG_FILE);
        let (lines, log_len) = read_log(&log_path)?;

        let mut sessions = HashMap::new();
        let mut counter = 0;
        let mut covered = 0u64;
        if let Some(snap) = read_snapshot(&dir.join(SNAPSHOT_FILE), log_len, &sets) {
            counter = snap.counter;
            covered = snap.log_len;
            sessions = snap.sessions.into_iter().map(|s| (s.id.clone(), s)).collect();
        }
        let log = OpenOptions::new().create(true).append(true).open(&log_path)?;
        let mut inner = Inner {
            log,
            log_len,
            counter,
            sessions,
        };
        let mut offset = 0u64;
        for (line_no, text) in lines {
            let start = offset;
            offset += text.len() as u64 + 1;
            if start < covered {
                continue;
            }
            let ev: Event = serde_json::from_str(&text).map_err(|e| StoreError::Corrupt {
                line: line_no,
                message: e.to_string(),
            })?;
            inner
                .apply(&sets, ev)
                .map_err(|message| StoreError::Corrupt {
                    line: line_no,
                    message,
                })?;
        }
        Ok(Store {
            dir,
            master_seed,
            sets,
            inner: Mutex::new(inner),
        })
    }

    pub fn set(&self, id: &str) -> Option<&StimulusSet> {
        self.sets.get(id)
    }

    pub fn set_ids(&self) -> impl Iterator<Item = &str> {
        self.sets.keys().map(|s| s.as_str())
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|p| p.into_inner())
    }

    fn view(&self, s: &Session) -> SessionView {
        let set = &self.sets[&s.set_id];
        SessionView {
            session_id: s.id.clone(),
            set_id: s.set_id.clone(),
            k: set.side(),
            trials: s
                .order
                .iter()
                .enumerate()
                .map(|(index, &pos)| Trial {
                    index,
                    pattern_hex: set.patterns()[pos].to_hex(),
                })
                .collect(),
            answered: (0..s.responses.len())
                .filter(|&i| s.responses[i].is_some())
                .collect(),
            completed: s.is_complete(),
        }
    }

    pub fn create_session(
        &self,
        set_id: &str,
        meta: ParticipantMeta,
    ) -> Result<SessionView, RequestError> {
        let set = self
            .sets
            .get(set_id)
            .ok_or_else(|| RequestError::NotFound(format!("no stimulus set {set_id:?}")))?;
        if meta.age.is_some_and(|a| a > MAX_AGE) {
            return Err(RequestError::Validation(format!(
                "age must be at most {MAX_AGE}"
            )));
        }
        if meta.gender.as_ref().is_some_and(|g| g.len() > MAX_GENDER_LEN) {
            return Err(RequestError::Validation(format!(
                "gender must be at most {MAX_GENDER_LEN} bytes"
            )));
        }
        let mut inner = self.lock();
        let counter = inner.counter;
        let mut order: Vec<usize> = (0..set.len()).collect();
        rng::shuffle(&mut rng::seeded_stream(self.master_seed, counter), &mut order);
        let session_id = uuid::Uuid::new_v4().to_string();
        let ev = Event::SessionCreated {
            session_id: session_id.clone(),
            set_id: set_id.to_string(),
            counter,
            age: meta.age,
            gender: meta.gender,
            order,
            created_at_ms: now_ms(),
        };
        inner.append(&ev)?;
        inner.apply(&self.sets, ev).expect("validated event applies");
        Ok(self.view(&inner.sessions[&session_id]))
    }

    pub fn session(&self, id: &str) -> Result<SessionView, RequestError> {
        let inner = self.lock();
        let s = inner
            .sessions
            .get(id)
            .ok_or_else(|| RequestError::NotFound(format!("no session {id:?}")))?;
        Ok(self.view(s))
    }

    /// Records one judgment. Re-sending an already stored judgment with the
    /// same choice and response time succeeds without writing anything.
    pub fn record_response(
        &self,
        session_id: &str,
        index: usize,
        choice: Choice,
        rt_ms: u64,
    ) -> Result<(), RequestError> {
        let mut inner = self.lock();
        let s = inner
            .sessions
            .get(session_id)
            .ok_or_else(|| RequestError::NotFound(format!("no session {session_id:?}")))?;
        let n = s.responses.len();
        if index >= n {
            return Err(RequestError::Validation(format!(
                "trial index {index} out of range 0..{n}"
            )));
        }
        if let Some(prev) = &s.responses[index] {
            return if prev.choice == choice && prev.rt_ms == rt_ms {
                Ok(())
            } else {
                Err(RequestError::Conflict(format!(
                    "trial {index} already has a different response"
                )))
            };
        }
        let ev = Event::Response {
            session_id: session_id.to_string(),
            index,
            choice,
            rt_ms,
            received_at_ms: now_ms(),
        };
        inner.append(&ev)?;
        inner.apply(&self.sets, ev).expect("validated event applies");
        Ok(())
    }

    /// Per-pattern tallies over completed sessions, in set order.
    pub fn export(&self, set_id: &str) -> Result<AggregateTable, RequestError> {
        let set = self
            .sets
            .get(set_id)
            .ok_or_else(|| RequestError::NotFound(format!("no stimulus set {set_id:?}")))?;
        let inner = self.lock();
        let mut n_random = vec![0u64; set.len()];
        let mut n_total = vec![0u64; set.len()];
        let mut completed = 0;
        for s in inner.sessions.values() {
            if s.set_id != set_id || !s.is_complete() {
                continue;
            }
            completed += 1;
            for (trial, r) in s.responses.iter().enumerate() {
                let pos = s.order[trial];
                let r = r.as_ref().expect("complete");
                n_total[pos] += 1;
                if r.choice == Choice::Random {
                    n_random[pos] += 1;
                }
            }
        }
        let rows = set
            .patterns()
            .iter()
            .enumerate()
            .map(|(i, &pattern)| scenestat_core::stats::JudgmentAggregate {
                pattern,
                n_random: n_random[i],
                n_total: n_total[i],
            })
            .collect();
        Ok(AggregateTable {
            set_id: set_id.to_string(),
            side: set.side(),
            completed_sessions: completed,
            rows,
        })
    }

    /// Every session, oldest first.
    pub fn sessions(&self) -> Vec<Session> {
        let inner = self.lock();
        let mut all: Vec<Session> = inner.sessions.values().cloned().collect();
        all.sort_by(|a, b| a.created_at_ms.cmp(&b.created_at_ms).then(a.id.cmp(&b.id)));
        all
    }

    /// Pattern shown at `trial` of a session.
    pub fn pattern_at(&self, session_id: &str, trial: usize) -> Option<Pattern> {
        let inner = self.lock();
        let s = inner.sessions.get(session_id)?;
        let pos = *s.order.get(trial)?;
        Some(self.sets[&s.set_id].patterns()[pos])
    }

    /// Writes `snapshot.json` atomically. Called on clean shutdown.
    pub fn snapshot(&self) -> Result<(), StoreError> {
        let inner = self.lock();
        let mut sessions: Vec<Session> = inner.sessions.values().cloned().collect();
        sessions.sort_by(|a, b| a.id.cmp(&b.id));
        let snap = Snapshot {
            log_len: inner.log_len,
            counter: inner.counter,
            sessions,
        };
        let tmp = self.dir.join(format!("{SNAPSHOT_FILE}.tmp"));
        let mut f = File::create(&tmp)?;
        f.write_all(&serde_json::to_vec(&snap).expect("snapshot serializes"))?;
        f.sync_all()?;
        fs::rename(&tmp, self.dir.join(SNAPSHOT_FILE))?;
        Ok(())
    }
}

/// A snapshot is used only if it covers a prefix of the retained log and
/// agrees with the sets on disk; otherwise the full log is replayed.
fn read_snapshot(
    path: &Path,
    log_len: u64,
    sets: &BTreeMap<String, StimulusSet>,
) -> Option<Snapshot> {
    let text = fs::read_to_string(path).ok()?;
    let snap: Snapshot = serde_json::from_str(&text).ok()?;
    let consistent = snap.sessions.iter().all(|s| {
        sets.get(&s.set_id)
            .is_some_and(|set| set.len() == s.order.len() && s.responses.len() == s.order.len())
    });
    (consistent && snap.log_len <= log_len).then_some(snap)
}
