//! Scenario runner for the `diffract` command-line tool: configuration
//! documents, the parallel Monte-Carlo driver, report files and the
//! deterministic self-tests.

// `!(x > 0.0)` is the NaN-rejecting form used for config checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod pointset;
pub mod report;
pub mod runner;
pub mod scenario;
pub mod scenarios;
pub mod selftest;

use std::path::{Path, PathBuf};

use config::{parse_document, ConfigError, Document};
use runner::{run, RunError, RunOptions, RunOutcome};
use scenario::resolve;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Run(#[from] RunError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl AppError {
    fn io(path: &Path) -> impl FnOnce(std::io::Error) -> AppError + '_ {
        move |source| AppError::Io { path: path.to_path_buf(), source }
    }
}

/// Reads `spec` as a file path, falling back to a built-in scenario name.
pub fn load_document(spec: &str) -> Result<Document, AppError> {
    let path = Path::new(spec);
    if path.exists() {
        let text = std::fs::read_to_string(path).map_err(AppError::io(path))?;
        return Ok(parse_document(&text)?);
    }
    match scenarios::find(spec) {
        Some(b) => Ok(parse_document(b.json)?),
        None => Err(ConfigError::at("config", format!("`{spec}` is neither a file nor a built-in scenario")).into()),
    }
}

pub struct MemberResult {
    pub name: String,
    pub dir: PathBuf,
    pub outcome: RunOutcome,
}

/// Runs every scenario of `doc`. A single scenario writes into `out`, the
/// members of a sweep into `out/<member name>`. All members are resolved
/// before the first simulation starts.
pub fn run_document(doc: &Document, opts: &RunOptions, out: &Path) -> Result<Vec<MemberResult>, AppError> {
    let members = doc.scenarios();
    for (i, m) in members.iter().enumerate() {
        let clash = members[..i].iter().any(|o| o.name == m.name);
        if clash || (matches!(doc, Document::Sweep(_)) && (m.name.is_empty() || m.name.contains(['/', '\\']) || m.name.starts_with('.'))) {
            return Err(ConfigError::at(format!("sweep[{i}].name"), "member names must be unique plain directory names").into());
        }
    }
    let resolved = members.iter().map(|c| resolve(c)).collect::<Result<Vec<_>, _>>()?;
    let mut results = Vec::with_capacity(resolved.len());
    for s in &resolved {
        let dir = match doc {
            Document::Single(_) => out.to_path_buf(),
            Document::Sweep(_) => out.join(&s.config.name),
        };
        let outcome = run(s, opts)?;
        report::write_outputs(&dir, s, opts, &outcome).map_err(AppError::io(&dir))?;
        results.push(MemberResult { name: s.config.name.clone(), dir, outcome });
    }
    Ok(results)
}
