use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::Serialize;

use super::parse::structural_issues;
use super::table::load_table;
use super::{Component, ConditionTable, FlowItem, TrainingPlan};

/// Condition tables keyed by loop name.
pub type TableSet = BTreeMap<String, ConditionTable>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Finding {
    pub severity: Severity,
    pub location: String,
    pub message: String,
}

impl Finding {
    fn error(location: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Error,
            location: location.into(),
            message: message.into(),
        }
    }

    fn warning(location: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Warning,
            location: location.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev}: {}: {}", self.location, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn errors(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| f.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| f.severity == Severity::Warning)
    }

    pub fn has_errors(&self) -> bool {
        self.errors().next().is_some()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for finding in &self.findings {
            writeln!(f, "{finding}")?;
        }
        let errors = self.errors().count();
        let warnings = self.warnings().count();
        write!(f, "{errors} error(s), {warnings} warning(s)")
    }
}

/// Loads every loop's table relative to `root`. Unreadable tables become
/// error findings and are absent from the returned set.
pub fn load_tables(plan: &TrainingPlan, root: &Path) -> (TableSet, Vec<Finding>) {
    let mut tables = TableSet::new();
    let mut findings = Vec::new();
    for l in plan.loops() {
        match load_table(&root.join(&l.table)) {
            Ok(table) => {
                tables.insert(l.name.clone(), table);
            }
            Err(err) => findings.push(Finding::error(
                format!("loop {}", l.name),
                format!("table {}: {err}", l.table),
            )),
        }
    }
    (tables, findings)
}

/// Structural invariants plus everything checkable against already-loaded
/// tables: row bounds, placeholder resolution and bound correct answers.
pub fn check_with_tables(plan: &TrainingPlan, tables: &TableSet) -> Vec<Finding> {
    let mut findings: Vec<Finding> = structural_issues(plan)
        .into_iter()
        .map(|issue| {
            Finding::error(
                issue.field.clone().unwrap_or_else(|| "plan".into()),
                format!("{}: {}", issue.kind, issue.message),
            )
        })
        .collect();

    for item in &plan.flow {
        match item {
            FlowItem::Routine { routine } => {
                let Some(r) = plan.routine(routine) else { continue };
                let columns: BTreeSet<&str> = r.columns().collect();
                for column in columns {
                    findings.push(Finding::error(
                        format!("routine {routine}"),
                        format!("placeholder ${column} used outside of a loop"),
                    ));
                }
            }
            FlowItem::Loop(l) => {
                let Some(table) = tables.get(&l.name) else {
                    findings.push(Finding::error(
                        format!("loop {}", l.name),
                        format!("table {} is not loaded", l.table),
                    ));
                    continue;
                };
                if let Some(rows) = &l.rows {
                    for &row in rows {
                        if row >= table.rows.len() {
                            findings.push(Finding::error(
                                format!("loop {}", l.name),
                                format!("row {row} is out of range for a {}-row table", table.rows.len()),
                            ));
                        }
                    }
                }
                for name in &l.body {
                    let Some(r) = plan.routine(name) else { continue };
                    let columns: BTreeSet<&str> = r.columns().collect();
                    for column in columns {
                        if !table.has_column(column) {
                            findings.push(Finding::error(
                                format!("loop {}", l.name),
                                format!(
                                    "column {column:?} used by routine {name:?} is missing from {}",
                                    l.table
                                ),
                            ));
                        }
                    }
                    if let Some(Component::KeyResponse {
                        allowed_keys,
                        correct_from,
                        ..
                    }) = r.key_response()
                    {
                        for row in l.selected_rows(table.rows.len()) {
                            let Some(bindings) = table.bindings(row) else { continue };
                            if let Ok(answer) = correct_from.render(&bindings) {
                                if !allowed_keys.contains(&answer) {
                                    findings.push(Finding::warning(
                                        format!("loop {} row {row}", l.name),
                                        format!("correct answer {answer:?} is not an allowed key"),
                                    ));
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    findings
}

/// Full validation of a plan against the directory it lives in.
///
/// Literal asset paths must exist (error); per-row asset paths built from
/// placeholders are only warned about, since stimuli may be generated later.
pub fn validate_plan(plan: &TrainingPlan, root: &Path) -> ValidationReport {
    let (tables, mut findings) = load_tables(plan, root);
    findings.extend(check_with_tables(plan, &tables));
    let assets = root.join(&plan.assets_dir);

    for routine in &plan.routines {
        for component in &routine.components {
            for (field, template) in component.asset_templates() {
                if template.is_literal() {
                    let path = template.literal_text();
                    if !assets.join(&path).is_file() {
                        findings.push(Finding::error(
                            format!("routine {}", routine.name),
                            format!("{} {field} {path:?} not found under {}", component.kind_name(), plan.assets_dir),
                        ));
                    }
                }
            }
        }
    }
    for l in plan.loops() {
        let Some(table) = tables.get(&l.name) else { continue };
        for row in l.selected_rows(table.rows.len()) {
            let Some(bindings) = table.bindings(row) else { continue };
            for name in &l.body {
                let Some(routine) = plan.routine(name) else { continue };
                for component in &routine.components {
                    for (field, template) in component.asset_templates() {
                        if template.is_literal() {
                            continue;
                        }
                        let Ok(path) = template.render(&bindings) else { continue };
                        if !assets.join(&path).is_file() {
                            findings.push(Finding::warning(
                                format!("loop {} row {row}", l.name),
                                format!("{} {field} {path:?} not found under {}", component.kind_name(), plan.assets_dir),
                            ));
                        }
                    }
                }
            }
        }
    }
    ValidationReport { findings }
}
