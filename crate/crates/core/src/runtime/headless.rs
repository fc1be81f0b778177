use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{AssetResolver, Directive, RuntimeError, Session, SessionConfig, SessionResult};
use crate::plan::{TableSet, TrainingPlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScriptEventKind {
    Key,
}

/// A scripted input: `key` pressed `at_ms` after session start.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptEvent {
    pub at_ms: u64,
    pub kind: ScriptEventKind,
    pub key: String,
}

/// A directive stamped with the tick that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub at_ms: u64,
    #[serde(flatten)]
    pub directive: Directive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeadlessRun {
    pub result: SessionResult,
    pub log: Vec<LogEntry>,
}

/// Parses an `at_ms,kind,key` script. Times must be non-decreasing; an
/// empty or header-only script has no events.
pub fn parse_script(bytes: &[u8]) -> Result<Vec<ScriptEvent>, RuntimeError> {
    let bad = |line: usize, message: String| RuntimeError::BadScript { line, message };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let header = reader.headers().map_err(|e| bad(1, e.to_string()))?.clone();
    if !header.is_empty() && header.iter().collect::<Vec<_>>() != ["at_ms", "kind", "key"] {
        return Err(bad(1, format!("expected header at_ms,kind,key, got {}", header.iter().collect::<Vec<_>>().join(","))));
    }
    let mut events: Vec<ScriptEvent> = Vec::new();
    for record in reader.deserialize::<ScriptEvent>() {
        let line = events.len() + 2;
        let event = record.map_err(|e| bad(line, e.to_string()))?;
        if event.key.is_empty() {
            return Err(bad(line, "key must be non-empty".into()));
        }
        if let Some(prev) = events.last() {
            if event.at_ms < prev.at_ms {
                return Err(bad(line, format!("at_ms {} is before {}", event.at_ms, prev.at_ms)));
            }
        }
        events.push(event);
    }
    Ok(events)
}

/// Runs a session to completion with a simulated clock that advances in
/// `config.tick_ms` steps from 0. Each scripted key is delivered at its
/// exact time; keys scheduled after the session ended are dropped.
pub fn run_headless(
    plan: &TrainingPlan,
    tables: &TableSet,
    config: SessionConfig,
    resolver: &dyn AssetResolver,
    script: &[ScriptEvent],
) -> Result<HeadlessRun, RuntimeError> {
    let tick = config.tick_ms;
    let mut session = Session::start(plan, tables, config, resolver)?;
    let mut log = Vec::new();
    let mut push = |at_ms: u64, directives: Vec<Directive>| {
        log.extend(directives.into_iter().map(|directive| LogEntry { at_ms, directive }));
    };

    push(0, session.tick(0)?);
    let mut events = script.iter().peekable();
    let mut now = 0;
    while !session.is_finished() {
        let next = now + tick;
        while let Some(event) = events.next_if(|e| e.at_ms <= next) {
            if session.is_finished() {
                break;
            }
            let at = event.at_ms.max(now);
            push(at, session.key_event(&event.key, at)?);
        }
        if session.is_finished() {
            break;
        }
        push(next, session.tick(next)?);
        now = next;
    }
    Ok(HeadlessRun {
        result: session.finish()?,
        log,
    })
}

/// Writes one JSON object per line.
pub fn write_log<W: Write>(log: &[LogEntry], mut out: W) -> std::io::Result<()> {
    for entry in log {
        serde_json::to_writer(&mut out, entry)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn script_parsing() {
        assert!(parse_script(b"").unwrap().is_empty());
        assert!(parse_script(b"at_ms,kind,key\n").unwrap().is_empty());
        let events = parse_script(b"at_ms,kind,key\n100,key,s\n100,key,n\n").unwrap();
        assert_eq!(events.len(), 2);
        assert_eq!(events[1].key, "n");
        assert!(matches!(
            parse_script(b"at_ms,kind,key\n100,key,s\n50,key,n\n"),
            Err(RuntimeError::BadScript { line: 3, .. })
        ));
        assert!(parse_script(b"at_ms,kind,key\n100,click,s\n").is_err());
        assert!(parse_script(b"time,key\n").is_err());
    }

    #[test]
    fn log_line_shape() {
        let entry = LogEntry {
            at_ms: 40,
            directive: Directive::PlayAudio { asset: "a.wav".into() },
        };
        let mut out = Vec::new();
        write_log(std::slice::from_ref(&entry), &mut out).unwrap();
        assert_eq!(
            String::from_utf8(out.clone()).unwrap(),
            "{\"at_ms\":40,\"type\":\"play_audio\",\"asset\":\"a.wav\"}\n"
        );
        let back: LogEntry = serde_json::from_slice(&out).unwrap();
        assert_eq!(back, entry);
    }
}
