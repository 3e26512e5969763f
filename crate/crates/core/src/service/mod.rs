//! Live sequential-inspection sessions.
//!
//! Each session is an append-only newline-delimited JSON log under the data
//! directory: one `created` record, then `result` and `undo` records. The
//! in-memory state is always the replay of that log, so restarting the
//! service rebuilds every session exactly.

mod http;

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::Error;
use crate::sprt::{Observation, SprtConfig, SprtState};

pub use http::{router, serve};

const LOG_EXTENSION: &str = "ndjson";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    BadRequest,
    NotFound,
    Conflict,
    Internal,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceError {
    pub kind: ErrorKind,
    pub field: Option<String>,
    pub message: String,
}

impl ServiceError {
    fn new(kind: ErrorKind, field: Option<&str>, message: impl Into<String>) -> Self {
        Self {
            kind,
            field: field.map(str::to_owned),
            message: message.into(),
        }
    }

    fn bad_request(field: &str, message: impl Into<String>) -> Self {
        Self::new(ErrorKind::BadRequest, Some(field), message)
    }

    fn not_found(id: &str) -> Self {
        Self::new(ErrorKind::NotFound, Some("id"), format!("no session `{id}`"))
    }

    fn internal(e: impl std::fmt::Display) -> Self {
        Self::new(ErrorKind::Internal, None, e.to_string())
    }
}

impl From<Error> for ServiceError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter { field, message } => {
                Self::new(ErrorKind::BadRequest, Some(&field), message)
            }
            Error::SteppedAfterStop(v) => Self::new(
                ErrorKind::Conflict,
                Some("verdict"),
                format!("session already decided: {v}"),
            ),
            other => Self::internal(other),
        }
    }
}

pub type ServiceResult<T> = std::result::Result<T, ServiceError>;

fn now_millis() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecordedResult {
    pub result: Observation,
    /// Unix milliseconds.
    pub recorded_at: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum LogRecord {
    Created {
        id: String,
        config: SprtConfig,
        at: u64,
    },
    Result {
        result: Observation,
        at: u64,
    },
    Undo {
        at: u64,
    },
}

/// Replays results through the stopping rules from a fresh state.
pub fn replay(config: &SprtConfig, results: &[RecordedResult]) -> crate::Result<SprtState> {
    results
        .iter()
        .try_fold(SprtState::new(), |s, e| s.step(config, e.result))
}

#[derive(Debug, Clone)]
pub struct Session {
    pub id: String,
    pub config: SprtConfig,
    pub state: SprtState,
    pub created_at: u64,
    pub events: Vec<RecordedResult>,
    log_path: PathBuf,
}

/// Snapshot returned after a mutation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateView {
    pub id: String,
    #[serde(flatten)]
    pub state: SprtState,
    pub likelihood_ratio: f64,
    pub log_a: f64,
    pub log_b: f64,
    pub a: f64,
    pub b: f64,
}

/// Full session view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub id: String,
    pub config: SprtConfig,
    #[serde(flatten)]
    pub state: SprtState,
    pub likelihood_ratio: f64,
    pub log_a: f64,
    pub log_b: f64,
    pub a: f64,
    pub b: f64,
    pub created_at: u64,
    pub events: Vec<RecordedResult>,
}

impl Session {
    fn state_view(&self) -> StateView {
        StateView {
            id: self.id.clone(),
            state: self.state,
            likelihood_ratio: self.state.likelihood_ratio(),
            log_a: self.config.log_a(),
            log_b: self.config.log_b(),
            a: self.config.log_a().exp(),
            b: self.config.log_b().exp(),
        }
    }

    pub fn view(&self) -> SessionView {
        let s = self.state_view();
        SessionView {
            id: s.id,
            config: self.config,
            state: s.state,
            likelihood_ratio: s.likelihood_ratio,
            log_a: s.log_a,
            log_b: s.log_b,
            a: s.a,
            b: s.b,
            created_at: self.created_at,
            events: self.events.clone(),
        }
    }

    fn append(&self, record: &LogRecord) -> ServiceResult<()> {
        let mut line = serde_json::to_string(record).map_err(ServiceError::internal)?;
        line.push('\n');
        let mut file = OpenOptions::new()
            .append(true)
            .open(&self.log_path)
            .map_err(ServiceError::internal)?;
        file.write_all(line.as_bytes())
            .and_then(|_| file.sync_data())
            .map_err(ServiceError::internal)
    }

    #[cfg(debug_assertions)]
    fn shadow_check(&self) {
        let replayed = replay(&self.config, &self.events).expect("event log replays");
        assert_eq!(replayed, self.state, "state diverged from event log");
    }

    #[cfg(not(debug_assertions))]
    fn shadow_check(&self) {}

    fn load(path: &Path) -> crate::Result<Session> {
        let reader = BufReader::new(File::open(path)?);
        let mut lines = Vec::new();
        for line in reader.lines() {
            lines.push(line?);
        }
        let mut records = Vec::with_capacity(lines.len());
        let last = lines.len().saturating_sub(1);
        for (i, line) in lines.iter().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<LogRecord>(line) {
                Ok(r) => records.push(r),
                // A torn final line from an interrupted write was never
                // acknowledged; drop it.
                Err(_) if i == last => {}
                Err(e) => return Err(e.into()),
            }
        }
        let mut iter = records.into_iter();
        let Some(LogRecord::Created { id, config, at }) = iter.next() else {
            return Err(Error::invalid(
                "log",
                format!("{} does not start with a created record", path.display()),
            ));
        };
        let mut events = Vec::new();
        for r in iter {
            match r {
                LogRecord::Result { result, at } => events.push(RecordedResult {
                    result,
                    recorded_at: at,
                }),
                LogRecord::Undo { .. } => {
                    events.pop();
                }
                LogRecord::Created { .. } => {
                    return Err(Error::invalid("log", "duplicate created record"))
                }
            }
        }
        let state = replay(&config, &events)?;
        Ok(Session {
            id,
            config,
            state,
            created_at: at,
            events,
            log_path: path.to_owned(),
        })
    }
}

fn field<'a>(obj: &'a serde_json::Map<String, Value>, name: &str) -> Option<&'a Value> {
    obj.get(name).filter(|v| !v.is_null())
}

fn require_f64(obj: &serde_json::Map<String, Value>, name: &str) -> ServiceResult<f64> {
    optional_f64(obj, name)?
        .ok_or_else(|| ServiceError::bad_request(name, format!("`{name}` is required")))
}

fn optional_f64(obj: &serde_json::Map<String, Value>, name: &str) -> ServiceResult<Option<f64>> {
    field(obj, name)
        .map(|v| {
            v.as_f64()
                .ok_or_else(|| ServiceError::bad_request(name, format!("`{name}` must be a number")))
        })
        .transpose()
}

fn require_u64(obj: &serde_json::Map<String, Value>, name: &str) -> ServiceResult<u64> {
    field(obj, name)
        .ok_or_else(|| ServiceError::bad_request(name, format!("`{name}` is required")))?
        .as_u64()
        .ok_or_else(|| {
            ServiceError::bad_request(name, format!("`{name}` must be a non-negative integer"))
        })
}

/// Parses a session-creation payload. `p1` may be replaced by `delta`, in
/// which case `p1 = p0 + delta`.
pub fn parse_config(body: &[u8]) -> ServiceResult<SprtConfig> {
    let value: Value = serde_json::from_slice(body)
        .map_err(|e| ServiceError::bad_request("body", format!("invalid JSON: {e}")))?;
    let obj = value
        .as_object()
        .ok_or_else(|| ServiceError::bad_request("body", "expected a JSON object"))?;
    let p0 = require_f64(obj, "p0")?;
    let p1 = match (optional_f64(obj, "p1")?, optional_f64(obj, "delta")?) {
        (Some(p1), _) => p1,
        (None, Some(delta)) => p0 + delta,
        (None, None) => {
            return Err(ServiceError::bad_request(
                "p1",
                "`p1` (or `delta`) is required",
            ))
        }
    };
    let alpha = require_f64(obj, "alpha")?;
    let beta = require_f64(obj, "beta")?;
    let n_max = require_u64(obj, "n_max")?;
    let k_star = require_u64(obj, "k_star")?;
    Ok(SprtConfig::new(p0, p1, alpha, beta, n_max, k_star)?)
}

/// Parses `{"result": "pass" | "defect"}`.
pub fn parse_result(body: &[u8]) -> ServiceResult<Observation> {
    let value: Value = serde_json::from_slice(body)
        .map_err(|e| ServiceError::bad_request("body", format!("invalid JSON: {e}")))?;
    let token = value
        .get("result")
        .and_then(Value::as_str)
        .ok_or_else(|| ServiceError::bad_request("result", "`result` must be a string"))?;
    Ok(token.parse::<Observation>()?)
}

/// All sessions, backed by one log file each.
pub struct SessionStore {
    data_dir: PathBuf,
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
}

impl SessionStore {
    /// Opens the data directory, replaying every session log found.
    pub fn open(data_dir: impl Into<PathBuf>) -> crate::Result<Self> {
        let data_dir = data_dir.into();
        fs::create_dir_all(&data_dir)?;
        let mut sessions = HashMap::new();
        for entry in fs::read_dir(&data_dir)? {
            let path = entry?.path();
            if path.extension().and_then(|e| e.to_str()) == Some(LOG_EXTENSION) {
                let session = Session::load(&path)?;
                sessions.insert(session.id.clone(), Arc::new(Mutex::new(session)));
            }
        }
        Ok(Self {
            data_dir,
            sessions: RwLock::new(sessions),
        })
    }

    pub fn data_dir(&self) -> &Path {
        &self.data_dir
    }

    pub fn len(&self) -> usize {
        self.sessions.read().expect("session map lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn get(&self, id: &str) -> ServiceResult<Arc<Mutex<Session>>> {
        self.sessions
            .read()
            .expect("session map lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::not_found(id))
    }

    pub fn create(&self, config: SprtConfig) -> ServiceResult<SessionView> {
        config.validate()?;
        let id = uuid::Uuid::new_v4().simple().to_string();
        let log_path = self.data_dir.join(format!("{id}.{LOG_EXTENSION}"));
        let at = now_millis();
        let record = LogRecord::Created {
            id: id.clone(),
            config,
            at,
        };
        let mut line = serde_json::to_string(&record).map_err(ServiceError::internal)?;
        line.push('\n');
        let mut file = OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&log_path)
            .map_err(ServiceError::internal)?;
        file.write_all(line.as_bytes())
            .and_then(|_| file.sync_all())
            .map_err(ServiceError::internal)?;
        let session = Session {
            id: id.clone(),
            config,
            state: SprtState::new(),
            created_at: at,
            events: Vec::new(),
            log_path,
        };
        let view = session.view();
        self.sessions
            .write()
            .expect("session map lock")
            .insert(id, Arc::new(Mutex::new(session)));
        Ok(view)
    }

    pub fn record(&self, id: &str, result: Observation) -> ServiceResult<StateView> {
        let handle = self.get(id)?;
        let mut session = handle.lock().expect("session lock");
        let next = session.state.step(&session.config, result)?;
        let at = now_millis();
        session.append(&LogRecord::Result { result, at })?;
        session.events.push(RecordedResult {
            result,
            recorded_at: at,
        });
        session.state = next;
        session.shadow_check();
        Ok(session.state_view())
    }

    pub fn undo(&self, id: &str) -> ServiceResult<StateView> {
        let handle = self.get(id)?;
        let mut session = handle.lock().expect("session lock");
        if session.events.is_empty() {
            return Err(ServiceError::new(
                ErrorKind::Conflict,
                Some("events"),
                "nothing to undo",
            ));
        }
        let mut remaining = session.events.clone();
        remaining.pop();
        let state = replay(&session.config, &remaining)?;
        session.append(&LogRecord::Undo { at: now_millis() })?;
        session.events = remaining;
        session.state = state;
        session.shadow_check();
        Ok(session.state_view())
    }

    pub fn view(&self, id: &str) -> ServiceResult<SessionView> {
        let handle = self.get(id)?;
        let session = handle.lock().expect("session lock");
        Ok(session.view())
    }
}
