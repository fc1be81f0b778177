#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use sonda_core::bundled::write_examples;
use sonda_core::catalog::{load_bundle, PlanBundle};

/// Bundled trainings generated once per test binary.
pub fn examples_dir() -> &'static Path {
    static DIR: OnceLock<PathBuf> = OnceLock::new();
    DIR.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap().keep();
        write_examples(&dir).unwrap();
        dir
    })
}

pub fn bundle(id: &str) -> PlanBundle {
    load_bundle(&examples_dir().join(format!("{id}.training.json"))).unwrap()
}

use chrono::{TimeZone, Utc};
use sonda_core::runtime::{
    expected_trials, Directive, ExpectedTrial, PrefixResolver, Session, SessionConfig, SessionResult,
};

pub fn config(participant: &str, session: &str, training: &str) -> SessionConfig {
    SessionConfig::new(participant, session, training, Utc.with_ymd_and_hms(2022, 4, 5, 10, 0, 0).unwrap())
}

/// Runs a session that answers each trial `delay_ms` after its window
/// opens with whatever `answer` returns (`None` leaves it blank).
pub fn drive(
    bundle: &PlanBundle,
    config: SessionConfig,
    delay_ms: u64,
    mut answer: impl FnMut(usize, &ExpectedTrial) -> Option<String>,
) -> SessionResult {
    let expected = expected_trials(&bundle.plan, &bundle.tables).unwrap();
    let mut session = Session::start(&bundle.plan, &bundle.tables, config, &PrefixResolver::default()).unwrap();
    let mut pending: Option<(u64, String)> = None;
    let mut now = 0;
    while !session.is_finished() {
        if let Some((at, key)) = pending.take_if(|(at, _)| *at <= now) {
            session.key_event(&key, at).unwrap();
        }
        if session.is_finished() {
            break;
        }
        let directives = session.tick(now).unwrap();
        if directives.iter().any(|d| matches!(d, Directive::AwaitKeys { .. })) {
            let index = session.records().len();
            if let Some(key) = answer(index, &expected[index]) {
                pending = Some((now + delay_ms, key));
            }
        }
        now += 10;
    }
    session.finish().unwrap()
}
