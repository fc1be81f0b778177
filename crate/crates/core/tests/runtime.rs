mod common;

use chrono::Duration;
use common::{bundle, config, drive};
use sonda_core::analytics::{aggregate, score_session};
use sonda_core::runtime::{
    expected_trials, parse_script, run_headless, write_log, Directive, FeedbackKind, Outcome, PrefixResolver,
    ScriptEvent, ScriptEventKind, Session,
};

/// Window-open offsets of the prototype's nine trials: each 7.9 s module
/// opens its window 4 s in, after a 4 s intro per module.
const PROTOTYPE_WINDOWS: [u64; 9] = [8000, 15_900, 23_800, 35_700, 43_600, 51_500, 63_400, 71_300, 79_200];

fn prototype_script(keys: &[String]) -> Vec<ScriptEvent> {
    PROTOTYPE_WINDOWS
        .iter()
        .zip(keys)
        .map(|(&at, key)| ScriptEvent {
            at_ms: at + 850,
            kind: ScriptEventKind::Key,
            key: key.clone(),
        })
        .collect()
}

#[test]
fn prototype_all_correct_and_empty_scripts() {
    let b = bundle("prototype");
    let expected = expected_trials(&b.plan, &b.tables).unwrap();
    assert_eq!(expected.len(), 9);
    let correct: Vec<String> = expected.iter().map(|t| t.correct_answer.clone()).collect();

    let run = run_headless(
        &b.plan,
        &b.tables,
        config("p1", "s1", "prototype"),
        &PrefixResolver::default(),
        &prototype_script(&correct),
    )
    .unwrap();
    let records = &run.result.records;
    assert_eq!(records.len(), 9);
    assert!(records.iter().all(|r| r.outcome == Outcome::Hit && r.rt_ms == Some(850)));
    assert_eq!(
        run.result.finished_at - run.result.config.started_at,
        Duration::milliseconds(83_100)
    );

    let empty = run_headless(&b.plan, &b.tables, config("p1", "s2", "prototype"), &PrefixResolver::default(), &[])
        .unwrap();
    assert_eq!(empty.result.records.len(), 9);
    assert!(empty.result.records.iter().all(|r| r.outcome == Outcome::NoAnswer && r.rt_ms.is_none()));

    let windows: Vec<u64> = run
        .log
        .iter()
        .filter(|e| matches!(e.directive, Directive::AwaitKeys { .. }))
        .map(|e| e.at_ms)
        .collect();
    assert_eq!(windows, PROTOTYPE_WINDOWS);
}

#[test]
fn prototype_pending_trials() {
    let b = bundle("prototype");
    let session = Session::start(&b.plan, &b.tables, config("p", "s", "prototype"), &b.resolver("")).unwrap();
    assert_eq!(session.pending_trials(), 9);
}

#[test]
fn prototype_intro_lasts_four_seconds() {
    let b = bundle("prototype");
    let mut session = Session::start(&b.plan, &b.tables, config("p", "s", "prototype"), &b.resolver("")).unwrap();
    let first = session.tick(0).unwrap();
    assert!(matches!(&first[..], [Directive::ShowText { .. }]));
    assert!(session.tick(3990).unwrap().is_empty());
    let next = session.tick(4000).unwrap();
    assert_eq!(next[0], Directive::ClearScreen);
    assert!(matches!(next[1], Directive::ShowImage { .. }));
}

#[test]
fn late_keys_are_ignored() {
    let b = bundle("prototype");
    let script = parse_script(b"at_ms,kind,key\n999999,key,s\n").unwrap();
    let run = run_headless(&b.plan, &b.tables, config("p", "s", "prototype"), &PrefixResolver::default(), &script)
        .unwrap();
    assert!(run.result.records.iter().all(|r| r.outcome == Outcome::NoAnswer));
}

#[test]
fn workshop_2_day_1_replays_identically() {
    let b = bundle("workshop-2-day-1");
    let expected = expected_trials(&b.plan, &b.tables).unwrap();
    // One key per second for the whole session: some land in windows.
    let script: Vec<ScriptEvent> = (1..400)
        .map(|i| ScriptEvent {
            at_ms: i * 1000 + 7,
            kind: ScriptEventKind::Key,
            key: expected[i as usize % expected.len()].correct_answer.clone(),
        })
        .collect();
    let log = |session: &str| {
        let run = run_headless(&b.plan, &b.tables, config("p", session, &b.plan.id), &b.resolver(""), &script).unwrap();
        let mut out = Vec::new();
        write_log(&run.log, &mut out).unwrap();
        (out, run.result.records)
    };
    let (a, records_a) = log("s");
    let (b2, records_b) = log("s");
    assert_eq!(a, b2);
    assert_eq!(records_a, records_b);
    assert_eq!(records_a.len(), expected.len());
    assert!(records_a.iter().any(|r| r.outcome != Outcome::NoAnswer));
}

#[test]
fn workshop_2_feedback_messages() {
    let b = bundle("workshop-2-day-1");
    let result = drive(&b, config("p", "s", &b.plan.id), 500, |_, t| {
        // Always answer the first allowed key that is not correct.
        t.allowed_keys.iter().find(|k| **k != t.correct_answer).cloned()
    });
    assert!(result.records.iter().all(|r| r.outcome == Outcome::Miss));

    let mut session = Session::start(&b.plan, &b.tables, config("p", "s", &b.plan.id), &b.resolver("")).unwrap();
    let expected = expected_trials(&b.plan, &b.tables).unwrap();
    let mut now = 0;
    let feedback = loop {
        let directives = session.tick(now).unwrap();
        if directives.iter().any(|d| matches!(d, Directive::AwaitKeys { .. })) {
            let wrong = expected[0].allowed_keys.iter().find(|k| **k != expected[0].correct_answer).unwrap();
            break session.key_event(wrong, now + 100).unwrap();
        }
        now += 10;
    };
    assert!(feedback.contains(&Directive::ShowFeedback {
        message: "Oops!! This seems to belong to a different glich class".into(),
        kind: FeedbackKind::Incorrect,
    }));
}

#[test]
fn blank_response_times_out_as_incorrect() {
    let b = bundle("workshop-1");
    let run = run_headless(&b.plan, &b.tables, config("p", "s", &b.plan.id), &PrefixResolver::default(), &[]).unwrap();
    let first = &run.result.records[0];
    assert_eq!(first.outcome, Outcome::NoAnswer);
    assert_eq!(first.response, "");
    // Intro 10 s, window opens 4 s into the trial and lasts 10 s.
    let feedback: Vec<_> = run
        .log
        .iter()
        .filter_map(|e| match &e.directive {
            Directive::ShowFeedback { message, kind } => Some((e.at_ms, message.as_str(), *kind)),
            _ => None,
        })
        .collect();
    assert_eq!(feedback[0], (24_000, "Incorrecto", FeedbackKind::Timeout));
    // Block 2 has no feedback routine: 4 + 10 feedback entries only.
    assert_eq!(feedback.len(), 14);
    assert_eq!(run.result.records.len(), 24);
}

#[test]
fn workshop_1_session_matches_first_participant() {
    let b = bundle("workshop-1");
    // Hits per block of the first participant.
    let hits = [("bloque1", 3), ("bloque2", 2), ("bloque3", 6)];
    let mut seen = std::collections::HashMap::<String, usize>::new();
    let result = drive(&b, config("p1", "s1", &b.plan.id), 700, |_, t| {
        let n = seen.entry(t.loop_name.clone()).or_default();
        *n += 1;
        let target = hits.iter().find(|(l, _)| *l == t.loop_name).unwrap().1;
        if *n <= target {
            Some(t.correct_answer.clone())
        } else if n.is_multiple_of(2) {
            t.allowed_keys.iter().find(|k| **k != t.correct_answer).cloned()
        } else {
            None
        }
    });
    let report = score_session(&result);
    let got: Vec<_> = report.per_block.iter().map(|(k, c)| (k.as_str(), c.hits)).collect();
    assert_eq!(got, [("bloque1", 3), ("bloque2", 2), ("bloque3", 6)]);
    assert!(result.records.iter().all(|r| r.check(Some(10_000)).is_ok()));
    let blocks = aggregate(&[report], &b.plan.block_sizes(&b.tables)).unwrap();
    assert_eq!(blocks[0].hit_percent.to_string(), "75.000");
}
