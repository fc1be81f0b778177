//! Training plans: routines of timed components, condition-table loops and
//! the flow that sequences them.

mod expand;
mod parse;
mod table;
mod template;
mod validate;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use expand::{expand_trials, ExpandError, TrialBinding};
pub use parse::{is_safe_relative, parse_plan, serialize_plan, ParseError, ParseErrorKind};
pub use table::{load_table, parse_table, ConditionTable};
pub use template::{PlaceholderError, Template, UnboundColumn};
pub use validate::{
    check_with_tables, load_tables, validate_plan, Finding, Severity, TableSet, ValidationReport,
};

/// A complete training definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingPlan {
    pub id: String,
    pub title: String,
    pub description: String,
    pub locale: String,
    pub routines: Vec<Routine>,
    pub flow: Vec<FlowItem>,
    pub assets_dir: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Routine {
    pub name: String,
    pub components: Vec<Component>,
    /// Fixed length in seconds; `0` means the routine ends once its response
    /// window and feedback have resolved.
    pub duration_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Component {
    Text {
        content: Template,
        start_s: f64,
        stop_s: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        narration: Option<Template>,
    },
    Image {
        source: Template,
        start_s: f64,
        stop_s: f64,
    },
    Audio {
        source: Template,
        start_s: f64,
    },
    KeyResponse {
        allowed_keys: Vec<String>,
        correct_from: Template,
        window_s: f64,
        /// Offset at which the response window opens.
        #[serde(default)]
        start_s: f64,
    },
    Feedback {
        correct_message: String,
        incorrect_message: String,
        timeout_message: String,
        duration_s: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoopOrder {
    Sequential,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Loop {
    pub name: String,
    pub table: String,
    pub order: LoopOrder,
    pub n_reps: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<Vec<usize>>,
    pub body: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FlowItem {
    Routine { routine: String },
    Loop(Loop),
}

impl Component {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Component::Text { .. } => "text",
            Component::Image { .. } => "image",
            Component::Audio { .. } => "audio",
            Component::KeyResponse { .. } => "key_response",
            Component::Feedback { .. } => "feedback",
        }
    }

    /// Every template the component carries, tagged with its field name.
    pub fn templates(&self) -> Vec<(&'static str, &Template)> {
        match self {
            Component::Text {
                content, narration, ..
            } => {
                let mut out = vec![("content", content)];
                if let Some(n) = narration {
                    out.push(("narration", n));
                }
                out
            }
            Component::Image { source, .. } => vec![("source", source)],
            Component::Audio { source, .. } => vec![("source", source)],
            Component::KeyResponse { correct_from, .. } => vec![("correct_from", correct_from)],
            Component::Feedback { .. } => Vec::new(),
        }
    }

    /// Templates that name files under the plan's assets directory.
    pub fn asset_templates(&self) -> Vec<(&'static str, &Template)> {
        self.templates()
            .into_iter()
            .filter(|(field, _)| *field != "content" && *field != "correct_from")
            .collect()
    }
}

impl Routine {
    pub fn key_response(&self) -> Option<&Component> {
        self.components
            .iter()
            .find(|c| matches!(c, Component::KeyResponse { .. }))
    }

    pub fn feedback(&self) -> Option<&Component> {
        self.components
            .iter()
            .find(|c| matches!(c, Component::Feedback { .. }))
    }

    pub fn columns(&self) -> impl Iterator<Item = &str> {
        self.components
            .iter()
            .flat_map(|c| c.templates().into_iter().flat_map(|(_, t)| t.columns()))
    }
}

impl Loop {
    /// Rows driven by the loop: the explicit selection or every table row.
    pub fn selected_rows(&self, table_len: usize) -> Vec<usize> {
        match &self.rows {
            Some(rows) => rows.clone(),
            None => (0..table_len).collect(),
        }
    }
}

impl TrainingPlan {
    pub fn routine(&self, name: &str) -> Option<&Routine> {
        self.routines.iter().find(|r| r.name == name)
    }

    pub fn loops(&self) -> impl Iterator<Item = &Loop> {
        self.flow.iter().filter_map(|item| match item {
            FlowItem::Loop(l) => Some(l),
            FlowItem::Routine { .. } => None,
        })
    }

    /// Trials per block that produce a record: one per expanded row for every
    /// body routine with a key response. Loops that record nothing are omitted.
    pub fn block_sizes(&self, tables: &TableSet) -> indexmap::IndexMap<String, u32> {
        let mut sizes = indexmap::IndexMap::new();
        for l in self.loops() {
            let responding = l
                .body
                .iter()
                .filter(|name| self.routine(name).and_then(Routine::key_response).is_some())
                .count() as u32;
            let rows = tables
                .get(&l.name)
                .map(|t| l.selected_rows(t.rows.len()).len())
                .unwrap_or(0) as u32;
            let size = l.n_reps * rows * responding;
            if size > 0 {
                sizes.insert(l.name.clone(), size);
            }
        }
        sizes
    }
}

/// Seconds to whole milliseconds, rounding to nearest.
pub fn seconds_to_ms(seconds: f64) -> u64 {
    (seconds * 1000.0).round().max(0.0) as u64
}

pub(crate) type Bindings = BTreeMap<String, String>;
