//! `$column` placeholders inside plan strings.
//!
//! A template is a sequence of literal text and column references. `$name`
//! refers to the condition-table column `name` (identifier syntax), and `$$`
//! is a literal dollar sign.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Segment {
    Literal(String),
    Column(String),
}

/// A plan string that may reference condition-table columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Template {
    raw: String,
    segments: Vec<Segment>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid placeholder in {raw:?} at byte {offset}: `$` must be followed by an identifier or another `$`")]
pub struct PlaceholderError {
    pub raw: String,
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("column `{0}` is not bound")]
pub struct UnboundColumn(pub String);

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

impl Template {
    pub fn parse(raw: &str) -> Result<Self, PlaceholderError> {
        let mut segments = Vec::new();
        let mut literal = String::new();
        let mut chars = raw.char_indices().peekable();
        while let Some((offset, c)) = chars.next() {
            if c != '$' {
                literal.push(c);
                continue;
            }
            match chars.peek() {
                Some(&(_, '$')) => {
                    chars.next();
                    literal.push('$');
                }
                Some(&(_, next)) if is_ident_start(next) => {
                    if !literal.is_empty() {
                        segments.push(Segment::Literal(std::mem::take(&mut literal)));
                    }
                    let mut name = String::new();
                    while let Some(&(_, c)) = chars.peek() {
                        if !is_ident_continue(c) {
                            break;
                        }
                        name.push(c);
                        chars.next();
                    }
                    segments.push(Segment::Column(name));
                }
                _ => {
                    return Err(PlaceholderError {
                        raw: raw.to_string(),
                        offset,
                    })
                }
            }
        }
        if !literal.is_empty() {
            segments.push(Segment::Literal(literal));
        }
        Ok(Self {
            raw: raw.to_string(),
            segments,
        })
    }

    /// Template with no placeholders; `$` is escaped.
    pub fn literal(text: &str) -> Self {
        Self::parse(&text.replace('$', "$$")).expect("escaped text always parses")
    }

    pub fn as_str(&self) -> &str {
        &self.raw
    }

    pub fn is_literal(&self) -> bool {
        self.segments
            .iter()
            .all(|s| matches!(s, Segment::Literal(_)))
    }

    /// Referenced column names, in order of appearance (duplicates kept).
    pub fn columns(&self) -> impl Iterator<Item = &str> {
        self.segments.iter().filter_map(|s| match s {
            Segment::Column(name) => Some(name.as_str()),
            Segment::Literal(_) => None,
        })
    }

    /// The text with `$$` unescaped; only meaningful when [`Self::is_literal`].
    pub fn literal_text(&self) -> String {
        self.segments
            .iter()
            .map(|s| match s {
                Segment::Literal(text) => text.as_str(),
                Segment::Column(_) => "",
            })
            .collect()
    }

    pub fn render(&self, bindings: &BTreeMap<String, String>) -> Result<String, UnboundColumn> {
        let mut out = String::new();
        for segment in &self.segments {
            match segment {
                Segment::Literal(text) => out.push_str(text),
                Segment::Column(name) => out.push_str(
                    bindings
                        .get(name)
                        .ok_or_else(|| UnboundColumn(name.clone()))?,
                ),
            }
        }
        Ok(out)
    }
}

impl TryFrom<String> for Template {
    type Error = PlaceholderError;

    fn try_from(raw: String) -> Result<Self, Self::Error> {
        Self::parse(&raw)
    }
}

impl From<Template> for String {
    fn from(t: Template) -> Self {
        t.raw
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.raw)
    }
}
