#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use chrono::{Duration, TimeZone, Utc};
use sonda_core::catalog::load_bundle;
use sonda_core::runtime::{expected_trials, Outcome, SessionConfig, SessionResult, TrialRecord};
use sonda_core::store::Store;

/// Hits per participant in blocks 1, 2 and 3 of the first workshop.
pub const WORKSHOP_1_HITS: [[usize; 3]; 6] = [[3, 2, 6], [1, 2, 6], [4, 5, 4], [4, 2, 3], [4, 4, 8], [2, 4, 1]];

pub fn sonda(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sonda")).args(args).output().unwrap()
}

pub fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

/// Bundled trainings written once per test binary by `sonda gen-examples`.
pub fn examples_dir() -> &'static Path {
    static DIR: OnceLock<PathBuf> = OnceLock::new();
    DIR.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap().keep();
        let out = sonda(&["gen-examples", dir.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        dir
    })
}

pub fn plan_path(id: &str) -> String {
    examples_dir().join(format!("{id}.training.json")).to_str().unwrap().to_string()
}

/// A complete first-workshop session with the given hits per block. The
/// other trials alternate between a wrong key and no answer.
pub fn workshop_1_session(participant: &str, session: &str, hits: [usize; 3]) -> SessionResult {
    let bundle = load_bundle(Path::new(&plan_path("workshop-1"))).unwrap();
    let blocks = ["bloque1", "bloque2", "bloque3"];
    let mut seen = [0usize; 3];
    let records = expected_trials(&bundle.plan, &bundle.tables)
        .unwrap()
        .iter()
        .map(|t| {
            let b = blocks.iter().position(|b| *b == t.loop_name).unwrap();
            seen[b] += 1;
            let response = if seen[b] <= hits[b] {
                t.correct_answer.clone()
            } else if seen[b] % 2 == 0 {
                t.allowed_keys.iter().find(|k| **k != t.correct_answer).unwrap().clone()
            } else {
                String::new()
            };
            let outcome = Outcome::classify(&response, &t.correct_answer);
            TrialRecord {
                loop_name: t.loop_name.clone(),
                rep_index: t.rep_index,
                row_index: t.row_index,
                routine_name: t.routine_name.clone(),
                stimulus_image: String::new(),
                stimulus_audio: String::new(),
                correct_answer: t.correct_answer.clone(),
                rt_ms: (outcome != Outcome::NoAnswer).then_some(1500),
                response,
                outcome,
            }
        })
        .collect();
    let started_at = Utc.with_ymd_and_hms(2022, 4, 5, 10, 0, 0).unwrap();
    SessionResult {
        config: SessionConfig::new(participant, session, "workshop-1", started_at),
        records,
        finished_at: started_at + Duration::minutes(6),
    }
}

/// A data directory holding the six first-workshop sessions.
pub fn workshop_1_store() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let store = Store::open(dir.path()).unwrap();
    for (i, hits) in WORKSHOP_1_HITS.iter().enumerate() {
        store
            .put_session(&workshop_1_session(&format!("p{}", i + 1), &format!("s{}", i + 1), *hits))
            .unwrap();
    }
    dir
}
