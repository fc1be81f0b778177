//! Sans-I/O execution of an expanded training.
//!
//! A [`Session`] is driven by a host-supplied monotonic millisecond clock
//! through [`Session::tick`] and [`Session::key_event`]. It returns
//! [`Directive`]s for the host to render and accumulates one
//! [`TrialRecord`] per executed routine that carries a key response.

mod headless;
mod session;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::plan::{ExpandError, Finding};

pub use headless::{parse_script, run_headless, write_log, HeadlessRun, LogEntry, ScriptEvent, ScriptEventKind};
pub use session::{expected_trials, ExpectedTrial, Session};

pub const DEFAULT_TICK_MS: u64 = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub participant_id: String,
    pub session_id: String,
    pub training_id: String,
    pub started_at: DateTime<Utc>,
    pub tick_ms: u64,
}

impl SessionConfig {
    pub fn new(
        participant_id: impl Into<String>,
        session_id: impl Into<String>,
        training_id: impl Into<String>,
        started_at: DateTime<Utc>,
    ) -> Self {
        Self {
            participant_id: participant_id.into(),
            session_id: session_id.into(),
            training_id: training_id.into(),
            started_at,
            tick_ms: DEFAULT_TICK_MS,
        }
    }

    fn check(&self) -> Result<(), RuntimeError> {
        if self.participant_id.is_empty() || self.session_id.is_empty() || self.training_id.is_empty() {
            return Err(RuntimeError::InvalidConfig("ids must be non-empty".into()));
        }
        if self.tick_ms == 0 {
            return Err(RuntimeError::InvalidConfig("tick_ms must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackKind {
    Correct,
    Incorrect,
    Timeout,
}

/// Instruction for the host renderer.
///
/// `ShowText` and `ShowImage` add to the screen; `ClearScreen` removes every
/// visual element. When one element's display time ends the session emits
/// `ClearScreen` followed by the elements that remain, re-sent without
/// narration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Directive {
    ShowText {
        content: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        narration: Option<String>,
    },
    ShowImage {
        asset: String,
    },
    PlayAudio {
        asset: String,
    },
    AwaitKeys {
        allowed_keys: Vec<String>,
        window_s: f64,
    },
    ShowFeedback {
        message: String,
        kind: FeedbackKind,
    },
    ClearScreen,
    SessionEnd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Hit,
    Miss,
    NoAnswer,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Hit => "hit",
            Outcome::Miss => "miss",
            Outcome::NoAnswer => "no_answer",
        }
    }

    /// Outcome implied by a response: hit iff it equals the expected key,
    /// no answer iff empty.
    pub fn classify(response: &str, correct_answer: &str) -> Self {
        if response.is_empty() {
            Outcome::NoAnswer
        } else if response == correct_answer {
            Outcome::Hit
        } else {
            Outcome::Miss
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Outcome {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hit" => Ok(Outcome::Hit),
            "miss" => Ok(Outcome::Miss),
            "no_answer" => Ok(Outcome::NoAnswer),
            other => Err(format!("unknown outcome {other:?}")),
        }
    }
}

/// Outcome of one trial. Routines outside any loop record an empty
/// `loop_name` with zero indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialRecord {
    pub loop_name: String,
    pub rep_index: u32,
    pub row_index: usize,
    pub routine_name: String,
    pub stimulus_image: String,
    pub stimulus_audio: String,
    pub correct_answer: String,
    pub response: String,
    pub rt_ms: Option<u64>,
    pub outcome: Outcome,
}

impl TrialRecord {
    /// Checks the outcome trichotomy and, when given, the RT bound.
    pub fn check(&self, window_ms: Option<u64>) -> Result<(), String> {
        let implied = Outcome::classify(&self.response, &self.correct_answer);
        if implied != self.outcome {
            return Err(format!(
                "outcome {} contradicts response {:?} and correct answer {:?}",
                self.outcome, self.response, self.correct_answer
            ));
        }
        match (self.outcome, self.rt_ms) {
            (Outcome::NoAnswer, Some(_)) => return Err("no_answer records must not carry rt_ms".into()),
            (Outcome::Hit | Outcome::Miss, None) => return Err("answered records need rt_ms".into()),
            _ => {}
        }
        if let (Some(rt), Some(window)) = (self.rt_ms, window_ms) {
            if rt > window {
                return Err(format!("rt_ms {rt} exceeds the {window} ms response window"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionResult {
    pub config: SessionConfig,
    pub records: Vec<TrialRecord>,
    pub finished_at: DateTime<Utc>,
}

#[derive(Debug, Error)]
pub enum RuntimeError {
    #[error("plan is not runnable: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    InvalidPlan(Vec<Finding>),
    #[error("invalid session config: {0}")]
    InvalidConfig(String),
    #[error("asset {path:?}: {reason}")]
    MissingAsset { path: String, reason: String },
    #[error(transparent)]
    Expand(#[from] ExpandError),
    #[error("clock went backwards from {last} ms to {now} ms")]
    ClockWentBackwards { last: u64, now: u64 },
    #[error("session already finished")]
    SessionFinished,
    #[error("session has not finished")]
    SessionNotFinished,
    #[error("script line {line}: {message}")]
    BadScript { line: usize, message: String },
}

/// Maps plan-relative asset paths to what hosts and records see.
pub trait AssetResolver {
    fn resolve(&self, path: &str) -> Result<String, String>;
}

/// Resolves against a directory and requires the file to exist. The
/// returned string is `prefix` followed by the asset path.
#[derive(Debug, Clone)]
pub struct DirectoryResolver {
    pub root: PathBuf,
    pub prefix: String,
}

impl DirectoryResolver {
    pub fn new(root: impl Into<PathBuf>, prefix: impl Into<String>) -> Self {
        Self {
            root: root.into(),
            prefix: prefix.into(),
        }
    }
}

impl AssetResolver for DirectoryResolver {
    fn resolve(&self, path: &str) -> Result<String, String> {
        if self.root.join(path).is_file() {
            Ok(format!("{}{path}", self.prefix))
        } else {
            Err(format!("not found under {}", self.root.display()))
        }
    }
}

/// Prefixes paths without touching the filesystem.
#[derive(Debug, Clone, Default)]
pub struct PrefixResolver {
    pub prefix: String,
}

impl AssetResolver for PrefixResolver {
    fn resolve(&self, path: &str) -> Result<String, String> {
        Ok(format!("{}{path}", self.prefix))
    }
}
