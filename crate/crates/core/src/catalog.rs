//! Plans on disk: `<dir>/<id>.training.json`, with tables and assets resolved
//! relative to `<dir>`.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::analytics::{aggregate, score_session, AnalyticsError, BlockReport};
use crate::plan::{load_tables, parse_plan, validate_plan, ParseError, TableSet, TrainingPlan, ValidationReport};
use crate::runtime::DirectoryResolver;
use crate::store::{SessionFilter, Store, StoreError};

pub const PLAN_SUFFIX: &str = ".training.json";

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: ParseError },
    #[error("{path}: plan id {id:?} does not match the file name")]
    IdMismatch { path: PathBuf, id: String },
    #[error("{path}: plan does not validate\n{report}")]
    Invalid { path: PathBuf, report: ValidationReport },
}

/// A validated plan with its loaded condition tables.
#[derive(Debug, Clone)]
pub struct PlanBundle {
    pub plan: TrainingPlan,
    pub tables: TableSet,
    /// Directory holding the plan file.
    pub root: PathBuf,
    pub report: ValidationReport,
}

impl PlanBundle {
    pub fn id(&self) -> &str {
        &self.plan.id
    }

    pub fn assets_root(&self) -> PathBuf {
        self.root.join(&self.plan.assets_dir)
    }

    /// Resolver over this plan's asset directory.
    pub fn resolver(&self, prefix: impl Into<String>) -> DirectoryResolver {
        DirectoryResolver::new(self.assets_root(), prefix)
    }
}

/// Loads and validates one plan file. Warnings are kept in the bundle.
pub fn load_bundle(path: &Path) -> Result<PlanBundle, CatalogError> {
    let bytes = fs::read(path).map_err(|source| CatalogError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let plan = parse_plan(&bytes).map_err(|source| CatalogError::Parse {
        path: path.to_path_buf(),
        source,
    })?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
    if let Some(stem) = name.strip_suffix(PLAN_SUFFIX) {
        if stem != plan.id {
            return Err(CatalogError::IdMismatch {
                path: path.to_path_buf(),
                id: plan.id,
            });
        }
    }
    let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let report = validate_plan(&plan, &root);
    if report.has_errors() {
        return Err(CatalogError::Invalid {
            path: path.to_path_buf(),
            report,
        });
    }
    let (tables, _) = load_tables(&plan, &root);
    Ok(PlanBundle {
        plan,
        tables,
        root,
        report,
    })
}

/// Every valid plan in `dir`, sorted by id, plus the files that were
/// rejected. A missing directory is an empty catalog.
pub fn scan(dir: &Path) -> (Vec<PlanBundle>, Vec<CatalogError>) {
    let mut paths: Vec<PathBuf> = match fs::read_dir(dir) {
        Ok(entries) => entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.is_file()
                    && p.file_name()
                        .and_then(|n| n.to_str())
                        .is_some_and(|n| n.ends_with(PLAN_SUFFIX))
            })
            .collect(),
        Err(_) => Vec::new(),
    };
    paths.sort();
    let mut bundles = Vec::new();
    let mut rejected = Vec::new();
    for path in paths {
        match load_bundle(&path) {
            Ok(b) => bundles.push(b),
            Err(e) => rejected.push(e),
        }
    }
    bundles.sort_by(|a, b| a.plan.id.cmp(&b.plan.id));
    bundles.dedup_by(|a, b| a.plan.id == b.plan.id);
    (bundles, rejected)
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
}

/// Aggregates every stored session of the bundle's training, optionally for
/// one participant. No sessions gives no blocks.
pub fn training_report(store: &Store, bundle: &PlanBundle, participant: Option<&str>) -> Result<Vec<BlockReport>, ReportError> {
    let filter = SessionFilter {
        training_id: Some(bundle.plan.id.clone()),
        participant_id: participant.map(str::to_string),
    };
    let mut reports = Vec::new();
    for entry in store.list_sessions(&filter)? {
        reports.push(score_session(&store.load_session(&entry.session_id)?));
    }
    if reports.is_empty() {
        return Ok(Vec::new());
    }
    Ok(aggregate(&reports, &bundle.plan.block_sizes(&bundle.tables))?)
}
