//! Plain-directory session store.
//!
//! ```text
//! <root>/sessions/<session_id>.csv   one row per trial record
//! <root>/index.jsonl                 one entry per stored session
//! ```

use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::{DateTime, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::runtime::{Outcome, SessionConfig, SessionResult, TrialRecord, DEFAULT_TICK_MS};

pub const SESSION_COLUMNS: [&str; 15] = [
    "participant_id",
    "session_id",
    "training_id",
    "loop_name",
    "rep_index",
    "row_index",
    "routine_name",
    "stimulus_image",
    "stimulus_audio",
    "correct_answer",
    "response",
    "outcome",
    "rt_ms",
    "started_at",
    "finished_at",
];

const TIMESTAMP: &str = "%Y-%m-%dT%H:%M:%S%.3fZ";

pub fn format_timestamp(t: &DateTime<Utc>) -> String {
    t.format(TIMESTAMP).to_string()
}

pub fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    NaiveDateTime::parse_from_str(s, TIMESTAMP)
        .ok()
        .map(|n| n.and_utc())
        .or_else(|| DateTime::parse_from_rfc3339(s).ok().map(|t| t.with_timezone(&Utc)))
}

mod millis {
    use chrono::{DateTime, Utc};
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format_timestamp(t))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<Utc>, D::Error> {
        let s = String::deserialize(d)?;
        super::parse_timestamp(&s).ok_or_else(|| D::Error::custom(format!("bad timestamp {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoreIndexEntry {
    pub session_id: String,
    pub training_id: String,
    pub participant_id: String,
    #[serde(with = "millis")]
    pub started_at: DateTime<Utc>,
    #[serde(with = "millis")]
    pub finished_at: DateTime<Utc>,
    /// Relative to the store root.
    pub path: String,
}

#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct SessionFilter {
    pub training_id: Option<String>,
    pub participant_id: Option<String>,
}

impl SessionFilter {
    fn matches(&self, e: &StoreIndexEntry) -> bool {
        self.training_id.as_ref().is_none_or(|t| *t == e.training_id)
            && self.participant_id.as_ref().is_none_or(|p| *p == e.participant_id)
    }
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("session {0} is already stored")]
    DuplicateSession(String),
    #[error("session {0} not found")]
    NotFound(String),
    #[error("{path}: row {row}: {message}")]
    ParseError { path: PathBuf, row: usize, message: String },
    #[error("invalid session id {0:?}")]
    InvalidId(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Session ids become file names, so they are restricted to a safe alphabet.
pub fn is_valid_session_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 128
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

#[derive(Debug)]
pub struct Store {
    root: PathBuf,
    index_lock: Mutex<()>,
}

impl Store {
    /// Opens (creating if needed) a store rooted at `root`.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        fs::create_dir_all(root.join("sessions"))?;
        Ok(Self {
            root,
            index_lock: Mutex::new(()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn sessions_dir(&self) -> PathBuf {
        self.root.join("sessions")
    }

    fn index_path(&self) -> PathBuf {
        self.root.join("index.jsonl")
    }

    fn session_path(&self, id: &str) -> PathBuf {
        self.sessions_dir().join(format!("{id}.csv"))
    }

    pub fn contains(&self, session_id: &str) -> bool {
        is_valid_session_id(session_id) && self.session_path(session_id).is_file()
    }

    /// Writes the session file via temp file and rename, syncs it, then
    /// appends the index entry. Returns the session file path.
    pub fn put_session(&self, result: &SessionResult) -> Result<PathBuf, StoreError> {
        let id = &result.config.session_id;
        if !is_valid_session_id(id) {
            return Err(StoreError::InvalidId(id.clone()));
        }
        let path = self.session_path(id);
        let _guard = self.index_lock.lock().unwrap_or_else(|p| p.into_inner());
        if path.exists() {
            return Err(StoreError::DuplicateSession(id.clone()));
        }

        let tmp = self.sessions_dir().join(format!(".{id}.csv.tmp"));
        {
            let mut file = File::create(&tmp)?;
            file.write_all(&session_csv(result))?;
            file.sync_all()?;
        }
        fs::rename(&tmp, &path)?;
        sync_dir(&self.sessions_dir())?;

        let entry = StoreIndexEntry {
            session_id: id.clone(),
            training_id: result.config.training_id.clone(),
            participant_id: result.config.participant_id.clone(),
            started_at: result.config.started_at,
            finished_at: result.finished_at,
            path: format!("sessions/{id}.csv"),
        };
        let mut line = serde_json::to_vec(&entry).expect("index entry serializes");
        line.push(b'\n');
        let mut index = OpenOptions::new().create(true).append(true).open(self.index_path())?;
        index.write_all(&line)?;
        index.sync_all()?;
        Ok(path)
    }

    /// Reads a stored session back. A session without records keeps its
    /// metadata in the index only.
    pub fn load_session(&self, session_id: &str) -> Result<SessionResult, StoreError> {
        if !is_valid_session_id(session_id) {
            return Err(StoreError::NotFound(session_id.to_string()));
        }
        let path = self.session_path(session_id);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                return Err(StoreError::NotFound(session_id.to_string()))
            }
            Err(e) => return Err(e.into()),
        };
        let (config, records, finished_at) = parse_session_csv(&path, &bytes)?;
        let (config, finished_at) = match config {
            Some(c) => (c, finished_at.expect("set with config")),
            None => {
                let entry = self
                    .read_index()?
                    .into_iter()
                    .find(|e| e.session_id == session_id)
                    .ok_or_else(|| StoreError::NotFound(session_id.to_string()))?;
                let config = SessionConfig {
                    participant_id: entry.participant_id,
                    session_id: entry.session_id,
                    training_id: entry.training_id,
                    started_at: entry.started_at,
                    tick_ms: DEFAULT_TICK_MS,
                };
                (config, entry.finished_at)
            }
        };
        Ok(SessionResult {
            config,
            records,
            finished_at,
        })
    }

    /// Index entries whose session file exists, matching `filter`, ordered
    /// by `finished_at` then `session_id`.
    pub fn list_sessions(&self, filter: &SessionFilter) -> Result<Vec<StoreIndexEntry>, StoreError> {
        let mut entries: Vec<_> = self
            .read_index()?
            .into_iter()
            .filter(|e| filter.matches(e) && self.root.join(&e.path).is_file())
            .collect();
        entries.sort_by(|a, b| (a.finished_at, &a.session_id).cmp(&(b.finished_at, &b.session_id)));
        entries.dedup_by(|a, b| a.session_id == b.session_id);
        Ok(entries)
    }

    fn read_index(&self) -> Result<Vec<StoreIndexEntry>, StoreError> {
        let text = match fs::read_to_string(self.index_path()) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(e.into()),
        };
        let mut out = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            // A torn final line from a crash mid-append is skipped.
            match serde_json::from_str(line) {
                Ok(entry) => out.push(entry),
                Err(_) if i + 1 == text.lines().count() => {}
                Err(e) => {
                    return Err(StoreError::ParseError {
                        path: self.index_path(),
                        row: i + 1,
                        message: e.to_string(),
                    })
                }
            }
        }
        Ok(out)
    }

    /// Rewrites the index from the session files. Sessions without records
    /// keep their index entry when one exists and are skipped otherwise.
    pub fn rebuild_index(&self) -> Result<Vec<StoreIndexEntry>, StoreError> {
        let _guard = self.index_lock.lock().unwrap_or_else(|p| p.into_inner());
        let old = self.read_index().unwrap_or_default();
        let mut entries = Vec::new();
        for dirent in fs::read_dir(self.sessions_dir())? {
            let path = dirent?.path();
            let Some(name) = path.file_name().and_then(|n| n.to_str()) else { continue };
            let Some(id) = name.strip_suffix(".csv") else { continue };
            if name.starts_with('.') || !is_valid_session_id(id) {
                continue;
            }
            let (config, _, finished_at) = parse_session_csv(&path, &fs::read(&path)?)?;
            let entry = match (config, finished_at) {
                (Some(c), Some(finished_at)) => StoreIndexEntry {
                    session_id: c.session_id,
                    training_id: c.training_id,
                    participant_id: c.participant_id,
                    started_at: c.started_at,
                    finished_at,
                    path: format!("sessions/{id}.csv"),
                },
                _ => match old.iter().find(|e| e.session_id == id) {
                    Some(e) => e.clone(),
                    None => continue,
                },
            };
            entries.push(entry);
        }
        entries.sort_by(|a, b| (a.finished_at, &a.session_id).cmp(&(b.finished_at, &b.session_id)));

        let mut body = Vec::new();
        for e in &entries {
            serde_json::to_writer(&mut body, e).expect("index entry serializes");
            body.push(b'\n');
        }
        let tmp = self.root.join(".index.jsonl.tmp");
        {
            let mut file = File::create(&tmp)?;
            file.write_all(&body)?;
            file.sync_all()?;
        }
        fs::rename(&tmp, self.index_path())?;
        sync_dir(&self.root)?;
        Ok(entries)
    }
}

fn sync_dir(dir: &Path) -> io::Result<()> {
    #[cfg(unix)]
    File::open(dir)?.sync_all()?;
    #[cfg(not(unix))]
    let _ = dir;
    Ok(())
}

/// The session file, exactly as stored.
pub fn session_csv(result: &SessionResult) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(SESSION_COLUMNS).expect("writing to memory");
    let c = &result.config;
    let started = format_timestamp(&c.started_at);
    let finished = format_timestamp(&result.finished_at);
    for r in &result.records {
        w.write_record([
            c.participant_id.as_str(),
            &c.session_id,
            &c.training_id,
            &r.loop_name,
            &r.rep_index.to_string(),
            &r.row_index.to_string(),
            &r.routine_name,
            &r.stimulus_image,
            &r.stimulus_audio,
            &r.correct_answer,
            &r.response,
            r.outcome.as_str(),
            &r.rt_ms.map(|v| v.to_string()).unwrap_or_default(),
            &started,
            &finished,
        ])
        .expect("writing to memory");
    }
    w.into_inner().expect("writing to memory")
}

type Parsed = (Option<SessionConfig>, Vec<TrialRecord>, Option<DateTime<Utc>>);

/// Parses a session file. Rows are numbered from 1 for the header.
pub fn parse_session_csv(path: &Path, bytes: &[u8]) -> Result<Parsed, StoreError> {
    let err = |row: usize, message: String| StoreError::ParseError {
        path: path.to_path_buf(),
        row,
        message,
    };
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
    let header = reader.headers().map_err(|e| err(1, e.to_string()))?;
    if header.iter().ne(SESSION_COLUMNS) {
        return Err(err(1, "unexpected header".into()));
    }
    let mut config: Option<SessionConfig> = None;
    let mut finished_at = None;
    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let n = i + 2;
        let row = row.map_err(|e| err(n, e.to_string()))?;
        if row.len() != SESSION_COLUMNS.len() {
            return Err(err(n, format!("expected {} fields, found {}", SESSION_COLUMNS.len(), row.len())));
        }
        let f = |k: usize| row[k].to_string();
        let int = |k: usize| {
            row[k]
                .parse::<u64>()
                .map_err(|_| err(n, format!("{} is not an integer: {:?}", SESSION_COLUMNS[k], &row[k])))
        };
        let time = |k: usize| {
            parse_timestamp(&row[k]).ok_or_else(|| err(n, format!("{} is not a timestamp: {:?}", SESSION_COLUMNS[k], &row[k])))
        };
        let started = time(13)?;
        let finished = time(14)?;
        let this = SessionConfig {
            participant_id: f(0),
            session_id: f(1),
            training_id: f(2),
            started_at: started,
            tick_ms: DEFAULT_TICK_MS,
        };
        match &config {
            None => {
                config = Some(this);
                finished_at = Some(finished);
            }
            Some(c) if *c != this || finished_at != Some(finished) => {
                return Err(err(n, "session columns differ from the first row".into()))
            }
            Some(_) => {}
        }
        let outcome: Outcome = row[11].parse().map_err(|e| err(n, e))?;
        let rt_ms = if row[12].is_empty() { None } else { Some(int(12)?) };
        records.push(TrialRecord {
            loop_name: f(3),
            rep_index: u32::try_from(int(4)?).map_err(|_| err(n, "rep_index too large".into()))?,
            row_index: int(5)? as usize,
            routine_name: f(6),
            stimulus_image: f(7),
            stimulus_audio: f(8),
            correct_answer: f(9),
            response: f(10),
            rt_ms,
            outcome,
        });
    }
    Ok((config, records, finished_at))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn result(id: &str, training: &str, participant: &str, finished_s: u32, n: usize) -> SessionResult {
        let started = Utc.with_ymd_and_hms(2022, 4, 5, 10, 0, 0).unwrap();
        SessionResult {
            config: SessionConfig::new(participant, id, training, started),
            records: (0..n)
                .map(|i| TrialRecord {
                    loop_name: "b1".into(),
                    rep_index: 0,
                    row_index: i,
                    routine_name: "trial".into(),
                    stimulus_image: "assets/a,b.svg".into(),
                    stimulus_audio: String::new(),
                    correct_answer: "s".into(),
                    response: if i % 3 == 0 { String::new() } else { "s".into() },
                    rt_ms: if i % 3 == 0 { None } else { Some(850 + i as u64) },
                    outcome: if i % 3 == 0 { Outcome::NoAnswer } else { Outcome::Hit },
                })
                .collect(),
            finished_at: started + chrono::Duration::milliseconds(i64::from(finished_s) * 1000 + 123),
        }
    }

    #[test]
    fn round_trip_and_duplicates() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        let r = result("s1", "t", "p", 83, 9);
        let path = store.put_session(&r).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap().lines().count(), 10);
        assert_eq!(store.load_session("s1").unwrap(), r);
        let before = fs::read(&path).unwrap();
        assert!(matches!(store.put_session(&r), Err(StoreError::DuplicateSession(_))));
        assert_eq!(fs::read(&path).unwrap(), before);
        assert!(matches!(store.load_session("nope"), Err(StoreError::NotFound(_))));
        assert!(matches!(store.load_session("../x"), Err(StoreError::NotFound(_))));
    }

    #[test]
    fn empty_session_round_trips_via_index() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        let r = result("empty", "t", "p", 4, 0);
        store.put_session(&r).unwrap();
        assert_eq!(store.load_session("empty").unwrap(), r);
    }

    #[test]
    fn ragged_row_reports_row_number() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        let path = store.put_session(&result("s1", "t", "p", 1, 3)).unwrap();
        let mut text = fs::read_to_string(&path).unwrap();
        text.push_str("p,s1,t,b1\n");
        fs::write(&path, text).unwrap();
        match store.load_session("s1") {
            Err(StoreError::ParseError { row, .. }) => assert_eq!(row, 5),
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn listing_filters_and_orders() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        assert!(store.list_sessions(&SessionFilter::default()).unwrap().is_empty());
        for (id, training, finished) in [("c", "t1", 5), ("a", "t2", 3), ("b", "t1", 5), ("d", "t1", 1)] {
            store.put_session(&result(id, training, "p", finished, 1)).unwrap();
        }
        let all: Vec<_> = store
            .list_sessions(&SessionFilter::default())
            .unwrap()
            .into_iter()
            .map(|e| e.session_id)
            .collect();
        assert_eq!(all, ["d", "a", "b", "c"]);
        let t1 = store
            .list_sessions(&SessionFilter {
                training_id: Some("t1".into()),
                ..Default::default()
            })
            .unwrap();
        assert_eq!(t1.len(), 3);
        assert!(t1.iter().all(|e| e.training_id == "t1"));
    }

    #[test]
    fn index_without_file_is_ignored_and_rebuild_matches() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        store.put_session(&result("a", "t", "p", 2, 2)).unwrap();
        store.put_session(&result("b", "t", "q", 1, 2)).unwrap();
        // Leftover temp file from an interrupted write.
        fs::write(dir.path().join("sessions/.c.csv.tmp"), "partial").unwrap();
        let listed = store.list_sessions(&SessionFilter::default()).unwrap();
        let rebuilt = store.rebuild_index().unwrap();
        assert_eq!(listed, rebuilt);
        assert_eq!(store.list_sessions(&SessionFilter::default()).unwrap(), rebuilt);
    }

    #[test]
    fn session_ids_are_restricted() {
        assert!(is_valid_session_id("6f1c2a4e-0000-4000-8000-000000000000"));
        assert!(!is_valid_session_id("../etc"));
        assert!(!is_valid_session_id("a/b"));
        assert!(!is_valid_session_id(""));
    }
}
