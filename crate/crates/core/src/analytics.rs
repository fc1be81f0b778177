//! Per-block accuracy scoring.

use std::fmt;

use indexmap::IndexMap;
use num_rational::Ratio;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::runtime::{Outcome, SessionResult, TrialRecord};
use crate::HitFraction;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeCounts {
    pub hits: u64,
    pub misses: u64,
    pub no_answers: u64,
}

impl OutcomeCounts {
    pub fn new(hits: u64, misses: u64, no_answers: u64) -> Self {
        Self {
            hits,
            misses,
            no_answers,
        }
    }

    pub fn total(&self) -> u64 {
        self.hits + self.misses + self.no_answers
    }

    pub fn add(&mut self, outcome: Outcome) {
        match outcome {
            Outcome::Hit => self.hits += 1,
            Outcome::Miss => self.misses += 1,
            Outcome::NoAnswer => self.no_answers += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParticipantReport {
    pub participant_id: String,
    /// Loop name to counts, in first-seen order.
    pub per_block: IndexMap<String, OutcomeCounts>,
}

/// Hit percentage held exactly; rounded half-up to thousandths for display
/// and serialization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct HitPercent(pub HitFraction);

impl HitPercent {
    pub fn new(hits: u64, total: u64) -> Self {
        assert!(total > 0, "hit percentage needs a positive denominator");
        Self(Ratio::new(hits * 100, total))
    }

    /// `round_half_up(1000 · value)`.
    pub fn thousandths(&self) -> u64 {
        let (n, d) = (*self.0.numer(), *self.0.denom());
        (n * 1000 * 2 + d) / (2 * d)
    }

    pub fn to_f64(&self) -> f64 {
        self.thousandths() as f64 / 1000.0
    }
}

impl fmt::Display for HitPercent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = self.thousandths();
        write!(f, "{}.{:03}", t / 1000, t % 1000)
    }
}

impl Serialize for HitPercent {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.to_f64())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlockReport {
    pub block: String,
    pub participants: u64,
    pub trials_per_participant: u64,
    pub hits: u64,
    pub misses: u64,
    pub no_answers: u64,
    pub hit_percent: HitPercent,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalyticsError {
    #[error("mismatched blocks: {0}")]
    MismatchedBlocks(String),
}

/// Counts outcomes per loop. Records outside any loop are not scored.
pub fn score_records(participant_id: &str, records: &[TrialRecord]) -> ParticipantReport {
    let mut per_block: IndexMap<String, OutcomeCounts> = IndexMap::new();
    for r in records.iter().filter(|r| !r.loop_name.is_empty()) {
        per_block.entry(r.loop_name.clone()).or_default().add(r.outcome);
    }
    ParticipantReport {
        participant_id: participant_id.to_string(),
        per_block,
    }
}

pub fn score_session(result: &SessionResult) -> ParticipantReport {
    score_records(&result.config.participant_id, &result.records)
}

/// Sums reports block by block. Every report must cover exactly the blocks
/// of `block_sizes`, each with that many trials.
pub fn aggregate(
    reports: &[ParticipantReport],
    block_sizes: &IndexMap<String, u32>,
) -> Result<Vec<BlockReport>, AnalyticsError> {
    let mismatch = |m: String| AnalyticsError::MismatchedBlocks(m);
    if reports.is_empty() {
        return Err(mismatch("no reports to aggregate".into()));
    }
    for report in reports {
        if report.per_block.len() != block_sizes.len()
            || report.per_block.keys().any(|k| !block_sizes.contains_key(k))
        {
            return Err(mismatch(format!(
                "participant {} covers blocks [{}], expected [{}]",
                report.participant_id,
                report.per_block.keys().cloned().collect::<Vec<_>>().join(", "),
                block_sizes.keys().cloned().collect::<Vec<_>>().join(", "),
            )));
        }
    }
    let participants = reports.len() as u64;
    let mut out = Vec::with_capacity(block_sizes.len());
    for (block, &size) in block_sizes {
        if size == 0 {
            return Err(mismatch(format!("block {block} has no trials")));
        }
        let mut sum = OutcomeCounts::default();
        for report in reports {
            let counts = report.per_block[block];
            if counts.total() != u64::from(size) {
                return Err(mismatch(format!(
                    "participant {} has {} trials in block {block}, expected {size}",
                    report.participant_id,
                    counts.total()
                )));
            }
            sum.hits += counts.hits;
            sum.misses += counts.misses;
            sum.no_answers += counts.no_answers;
        }
        out.push(BlockReport {
            block: block.clone(),
            participants,
            trials_per_participant: u64::from(size),
            hits: sum.hits,
            misses: sum.misses,
            no_answers: sum.no_answers,
            hit_percent: HitPercent::new(sum.hits, participants * u64::from(size)),
        });
    }
    Ok(out)
}

pub const REPORT_COLUMNS: [&str; 6] = ["block", "participants", "hits", "misses", "no_answers", "hit_percent"];

fn report_row(b: &BlockReport) -> [String; 6] {
    [
        b.block.clone(),
        b.participants.to_string(),
        b.hits.to_string(),
        b.misses.to_string(),
        b.no_answers.to_string(),
        b.hit_percent.to_string(),
    ]
}

pub fn render_csv(blocks: &[BlockReport]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(REPORT_COLUMNS).expect("writing to memory");
    for b in blocks {
        w.write_record(report_row(b)).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("csv of utf-8 fields")
}

/// Space-aligned table: text columns left-aligned, numbers right-aligned.
pub fn render_text(blocks: &[BlockReport]) -> String {
    let rows: Vec<[String; 6]> = blocks.iter().map(report_row).collect();
    let mut widths = REPORT_COLUMNS.map(|c| c.chars().count());
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: [&str; 6]| {
        let mut s = String::new();
        for (i, (cell, w)) in cells.iter().zip(widths).enumerate() {
            if i > 0 {
                s.push_str("  ");
            }
            let pad = " ".repeat(w - cell.chars().count());
            if i == 0 {
                s.push_str(cell);
                s.push_str(&pad);
            } else {
                s.push_str(&pad);
                s.push_str(cell);
            }
        }
        s.trim_end().to_string() + "\n"
    };
    let mut out = line(REPORT_COLUMNS);
    for row in &rows {
        out.push_str(&line(row.each_ref().map(String::as_str)));
    }
    out
}

/// Text table and CSV for the same blocks.
pub fn render_report(blocks: &[BlockReport]) -> (String, String) {
    (render_text(blocks), render_csv(blocks))
}
