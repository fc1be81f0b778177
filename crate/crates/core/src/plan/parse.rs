use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

use super::{Component, FlowItem, LoopOrder, TrainingPlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax,
    UnknownField,
    BadReference,
    BadPlaceholder,
    RaggedRow,
    EmptyHeader,
    DuplicateColumn,
    Io,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParseErrorKind::Syntax => "syntax",
            ParseErrorKind::UnknownField => "unknown_field",
            ParseErrorKind::BadReference => "bad_reference",
            ParseErrorKind::BadPlaceholder => "bad_placeholder",
            ParseErrorKind::RaggedRow => "ragged_row",
            ParseErrorKind::EmptyHeader => "empty_header",
            ParseErrorKind::DuplicateColumn => "duplicate_column",
            ParseErrorKind::Io => "io",
        })
    }
}

/// Failure to read a plan document or a condition table.
///
/// `line` is the 1-based document line (for tables, the CSV record's line);
/// `field` is a path such as `routines[2].components[0].window_s`.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub message: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub field: Option<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)?;
        if let Some(field) = &self.field {
            write!(f, " (at {field})")?;
        }
        if let Some(line) = self.line {
            write!(f, " (line {line}")?;
            if let Some(col) = self.column {
                write!(f, ", column {col}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl ParseError {
    pub(crate) fn new(kind: ParseErrorKind, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
            line: None,
            column: None,
            field: None,
        }
    }

    pub(crate) fn at_line(mut self, line: usize) -> Self {
        self.line = Some(line);
        self
    }

    pub(crate) fn at_field(mut self, field: impl Into<String>) -> Self {
        self.field = Some(field.into());
        self
    }
}

/// Parses a `.training.json` document and checks every invariant that does
/// not need the filesystem.
pub fn parse_plan(document: &[u8]) -> Result<TrainingPlan, ParseError> {
    let text = std::str::from_utf8(document).map_err(|e| {
        ParseError::new(ParseErrorKind::Syntax, format!("document is not UTF-8: {e}"))
    })?;
    let plan: TrainingPlan = serde_json::from_str(text).map_err(classify_json_error)?;
    if let Some(issue) = structural_issues(&plan).into_iter().next() {
        return Err(issue);
    }
    Ok(plan)
}

/// Pretty-printed JSON; [`parse_plan`] reads it back to an equal plan.
pub fn serialize_plan(plan: &TrainingPlan) -> String {
    let mut out = serde_json::to_string_pretty(plan).expect("plans always serialize");
    out.push('\n');
    out
}

fn classify_json_error(err: serde_json::Error) -> ParseError {
    let message = err.to_string();
    let kind = if message.starts_with("unknown field") || message.starts_with("unknown variant") {
        ParseErrorKind::UnknownField
    } else if message.starts_with("invalid placeholder") {
        ParseErrorKind::BadPlaceholder
    } else {
        ParseErrorKind::Syntax
    };
    let mut error = ParseError::new(kind, message);
    if err.line() > 0 {
        error.line = Some(err.line());
        error.column = Some(err.column());
    }
    error
}

fn is_slug(id: &str) -> bool {
    !id.is_empty()
        && id
            .bytes()
            .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'-')
}

fn is_locale(tag: &str) -> bool {
    let mut parts = tag.split('-');
    let primary = parts.next().unwrap_or("");
    (2..=8).contains(&primary.len())
        && primary.bytes().all(|b| b.is_ascii_alphabetic())
        && parts.all(|p| (1..=8).contains(&p.len()) && p.bytes().all(|b| b.is_ascii_alphanumeric()))
}

/// A relative path without `..` segments, backslashes or a leading `/`.
pub fn is_safe_relative(path: &str) -> bool {
    !path.is_empty()
        && !path.starts_with('/')
        && !path.contains('\\')
        && !path.contains(':')
        && path.split('/').all(|seg| seg != "..")
}

fn finite_nonneg(v: f64) -> bool {
    v.is_finite() && v >= 0.0
}

/// Invariant violations detectable from the plan alone, in document order.
pub(crate) fn structural_issues(plan: &TrainingPlan) -> Vec<ParseError> {
    use ParseErrorKind::{BadReference, Syntax};
    let mut issues = Vec::new();
    let mut push = |kind, field: String, message: String| {
        issues.push(ParseError::new(kind, message).at_field(field));
    };

    if !is_slug(&plan.id) {
        push(Syntax, "id".into(), format!("id {:?} must match [a-z0-9-]+", plan.id));
    }
    if !is_locale(&plan.locale) {
        push(Syntax, "locale".into(), format!("locale {:?} is not a BCP-47 tag", plan.locale));
    }
    if !is_safe_relative(&plan.assets_dir) {
        push(
            BadReference,
            "assets_dir".into(),
            format!("assets_dir {:?} must be a relative path without `..`", plan.assets_dir),
        );
    }

    let mut names = HashSet::new();
    for (ri, routine) in plan.routines.iter().enumerate() {
        let at = format!("routines[{ri}]");
        if routine.name.is_empty() {
            push(Syntax, format!("{at}.name"), "routine name must be non-empty".into());
        }
        if !names.insert(routine.name.as_str()) {
            push(
                BadReference,
                format!("{at}.name"),
                format!("duplicate routine name {:?}", routine.name),
            );
        }
        if !finite_nonneg(routine.duration_s) {
            push(Syntax, format!("{at}.duration_s"), "duration_s must be >= 0".into());
        }
        let fixed = routine.duration_s > 0.0;
        let within = |t: f64| !fixed || t <= routine.duration_s + 1e-9;
        let mut key_responses = 0;
        let mut feedbacks = 0;
        for (ci, component) in routine.components.iter().enumerate() {
            let at = format!("{at}.components[{ci}]");
            let mut offsets: Vec<(&str, f64)> = Vec::new();
            match component {
                Component::Text { start_s, stop_s, .. } | Component::Image { start_s, stop_s, .. } => {
                    offsets.push(("start_s", *start_s));
                    offsets.push(("stop_s", *stop_s));
                    if stop_s <= start_s {
                        push(Syntax, format!("{at}.stop_s"), "stop_s must be greater than start_s".into());
                    }
                }
                Component::Audio { start_s, .. } => offsets.push(("start_s", *start_s)),
                Component::KeyResponse {
                    allowed_keys,
                    window_s,
                    start_s,
                    ..
                } => {
                    key_responses += 1;
                    offsets.push(("start_s", *start_s));
                    if !(window_s.is_finite() && *window_s > 0.0) {
                        push(Syntax, format!("{at}.window_s"), "window_s must be > 0".into());
                    }
                    if allowed_keys.is_empty() {
                        push(Syntax, format!("{at}.allowed_keys"), "allowed_keys must be non-empty".into());
                    }
                    let mut seen = HashSet::new();
                    for key in allowed_keys {
                        if key.is_empty() || !seen.insert(key.as_str()) {
                            push(
                                Syntax,
                                format!("{at}.allowed_keys"),
                                format!("allowed key {key:?} is empty or repeated"),
                            );
                        }
                    }
                }
                Component::Feedback { duration_s, .. } => {
                    feedbacks += 1;
                    if !(duration_s.is_finite() && *duration_s > 0.0) {
                        push(Syntax, format!("{at}.duration_s"), "feedback duration_s must be > 0".into());
                    }
                }
            }
            for (name, value) in offsets {
                if !finite_nonneg(value) || !within(value) {
                    push(
                        Syntax,
                        format!("{at}.{name}"),
                        format!("{name} {value} lies outside the routine's [0, {}] s", routine.duration_s),
                    );
                }
            }
            for (field, template) in component.asset_templates() {
                // The literal skeleton must already be a safe relative path;
                // substituted values are checked again at run time.
                let skeleton = template.as_str().replace('$', "x");
                if !is_safe_relative(&skeleton) {
                    push(
                        BadReference,
                        format!("{at}.{field}"),
                        format!("asset path {:?} must be relative without `..`", template.as_str()),
                    );
                }
            }
        }
        if key_responses > 1 {
            push(Syntax, format!("{at}.components"), "at most one key_response per routine".into());
        }
        if feedbacks > 1 {
            push(Syntax, format!("{at}.components"), "at most one feedback per routine".into());
        }
        if feedbacks > 0 && key_responses == 0 {
            push(
                Syntax,
                format!("{at}.components"),
                "feedback needs a key_response in the same routine".into(),
            );
        }
    }

    if plan.flow.is_empty() {
        push(BadReference, "flow".into(), "flow must be non-empty".into());
    }
    let mut loop_names = HashSet::new();
    for (fi, item) in plan.flow.iter().enumerate() {
        let at = format!("flow[{fi}]");
        match item {
            FlowItem::Routine { routine } => {
                if plan.routine(routine).is_none() {
                    push(BadReference, format!("{at}.routine"), format!("unknown routine {routine:?}"));
                }
            }
            FlowItem::Loop(l) => {
                if l.name.is_empty() || !loop_names.insert(l.name.as_str()) {
                    push(BadReference, format!("{at}.name"), format!("loop name {:?} is empty or repeated", l.name));
                }
                if !is_safe_relative(&l.table) {
                    push(
                        BadReference,
                        format!("{at}.table"),
                        format!("table path {:?} must be relative without `..`", l.table),
                    );
                }
                if l.body.is_empty() {
                    push(BadReference, format!("{at}.body"), format!("loop {:?} has an empty body", l.name));
                }
                for name in &l.body {
                    if plan.routine(name).is_none() {
                        push(BadReference, format!("{at}.body"), format!("unknown routine {name:?}"));
                    }
                }
                if l.order == LoopOrder::Random && l.seed.is_none() {
                    push(Syntax, format!("{at}.seed"), format!("random loop {:?} requires a seed", l.name));
                }
            }
        }
    }
    issues
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "id": "mini",
        "title": "Mini",
        "description": "",
        "locale": "es-AR",
        "assets_dir": "assets/mini",
        "routines": [
            {"name": "intro", "duration_s": 4.0, "components": [
                {"type": "text", "content": "Hola", "start_s": 0.0, "stop_s": 4.0}
            ]},
            {"name": "trial", "duration_s": 0.0, "components": [
                {"type": "audio", "source": "$sound", "start_s": 0.0},
                {"type": "key_response", "allowed_keys": ["left", "right"], "correct_from": "$corrAns", "window_s": 10.0}
            ]}
        ],
        "flow": [
            {"type": "routine", "routine": "intro"},
            {"type": "loop", "name": "block", "table": "tables/block.csv", "order": "sequential", "n_reps": 1, "body": ["trial"]}
        ]
    }"#;

    fn with(from: &str, to: &str) -> String {
        assert!(MINIMAL.contains(from), "fixture lacks {from}");
        MINIMAL.replacen(from, to, 1)
    }

    #[test]
    fn minimal_plan_parses() {
        let plan = parse_plan(MINIMAL.as_bytes()).unwrap();
        assert_eq!(plan.routines.len(), 2);
        assert_eq!(plan.loops().count(), 1);
    }

    #[test]
    fn empty_flow_is_bad_reference() {
        let start = MINIMAL.find("\"flow\"").unwrap();
        let doc = format!("{}\"flow\": []\n}}", &MINIMAL[..start]);
        let err = parse_plan(doc.as_bytes()).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::BadReference);
        assert_eq!(err.message, "flow must be non-empty");
    }

    #[test]
    fn unknown_field_rejected_with_line() {
        let err = parse_plan(with("\"n_reps\": 1", "\"n_reps\": 1, \"nReps\": 2").as_bytes()).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownField);
        // Tagged items are buffered before field checks, so the position
        // lands at or just after the offending object.
        assert!(matches!(err.line, Some(18 | 19)), "line {:?}", err.line);
        assert!(err.message.contains("nReps"));
        let err = parse_plan(with("\"type\": \"audio\"", "\"type\": \"video\"").as_bytes()).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownField);
    }

    #[test]
    fn bad_placeholder_rejected() {
        let err = parse_plan(with("$sound", "$ sound").as_bytes()).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::BadPlaceholder);
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse_plan(b"{\"id\": }").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Syntax);
        assert_eq!(err.line, Some(1));
    }

    #[test]
    fn dangling_routine_reference() {
        let err = parse_plan(with("\"body\": [\"trial\"]", "\"body\": [\"trail\"]").as_bytes()).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::BadReference);
        assert_eq!(err.field.as_deref(), Some("flow[1].body"));
    }

    #[test]
    fn random_loop_without_seed() {
        let err = parse_plan(with("\"sequential\"", "\"random\"").as_bytes()).unwrap_err();
        assert_eq!(err.field.as_deref(), Some("flow[1].seed"));
    }

    #[test]
    fn invalid_id_and_traversal() {
        let err = parse_plan(with("\"mini\"", "\"Mini Plan\"").as_bytes()).unwrap_err();
        assert_eq!(err.field.as_deref(), Some("id"));
        let err = parse_plan(with("\"$sound\"", "\"../$sound\"").as_bytes()).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::BadReference);
    }

    #[test]
    fn offsets_must_fit_fixed_duration() {
        let err = parse_plan(with("\"stop_s\": 4.0", "\"stop_s\": 5.0").as_bytes()).unwrap_err();
        assert_eq!(err.field.as_deref(), Some("routines[0].components[0].stop_s"));
    }

    #[test]
    fn duplicate_and_empty_keys() {
        let err = parse_plan(with("[\"left\", \"right\"]", "[\"left\", \"left\"]").as_bytes()).unwrap_err();
        assert_eq!(err.field.as_deref(), Some("routines[1].components[1].allowed_keys"));
        let err = parse_plan(with("[\"left\", \"right\"]", "[]").as_bytes()).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Syntax);
    }

    #[test]
    fn serialize_round_trip() {
        let plan = parse_plan(MINIMAL.as_bytes()).unwrap();
        let again = parse_plan(serialize_plan(&plan).as_bytes()).unwrap();
        assert_eq!(plan, again);
    }
}
