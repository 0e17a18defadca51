use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use walkdir::WalkDir;

use super::parse::{parse_redif, Diagnostic, RedifTemplate};
use super::template_region_count;
use crate::ids::Timestamp;
use crate::registry::{ItemKind, ScholarlyItem};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchiveDescriptor {
    pub archive_code: String,
    pub base_url: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub last_harvest: Option<Timestamp>,
}

impl ArchiveDescriptor {
    pub fn new(archive_code: impl Into<String>, base_url: impl Into<String>) -> Result<Self, FetchError> {
        let archive_code = archive_code.into();
        if archive_code.is_empty()
            || !archive_code
                .chars()
                .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit())
        {
            return Err(FetchError::InvalidArchiveCode(archive_code));
        }
        Ok(ArchiveDescriptor {
            archive_code,
            base_url: base_url.into(),
            last_harvest: None,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub files_fetched: usize,
    pub templates_parsed: usize,
    pub templates_rejected: usize,
    pub diagnostics: Vec<Diagnostic>,
    #[serde(default)]
    pub items_created: usize,
    #[serde(default)]
    pub items_updated: usize,
    #[serde(default)]
    pub items_unchanged: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FetchError {
    #[error("archive unreachable: {0}")]
    UnreachableArchive(String),
    #[error("cannot fetch {path}: {reason}")]
    Resource { path: String, reason: String },
    #[error("archive code must be non-empty lowercase alphanumeric, got {0:?}")]
    InvalidArchiveCode(String),
}

/// Lists and retrieves `.rdf` resources below an archive's base URL.
pub trait ResourceFetcher {
    /// Relative paths of every resource to harvest, in a stable order.
    fn enumerate(&self, base_url: &str) -> Result<Vec<String>, FetchError>;
    fn fetch(&self, base_url: &str, path: &str) -> Result<Vec<u8>, FetchError>;
}

/// Reads archives from the local file system (`file://` URLs or bare paths).
#[derive(Debug, Clone, Copy, Default)]
pub struct FileFetcher;

fn local_root(base_url: &str) -> PathBuf {
    PathBuf::from(base_url.strip_prefix("file://").unwrap_or(base_url))
}

fn is_rdf(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("rdf"))
}

impl ResourceFetcher for FileFetcher {
    fn enumerate(&self, base_url: &str) -> Result<Vec<String>, FetchError> {
        let root = local_root(base_url);
        if !root.is_dir() {
            return Err(FetchError::UnreachableArchive(base_url.to_string()));
        }
        let mut out = Vec::new();
        for entry in WalkDir::new(&root).sort_by_file_name() {
            let entry = entry.map_err(|e| FetchError::UnreachableArchive(e.to_string()))?;
            if entry.file_type().is_dir() || !is_rdf(entry.path()) {
                continue;
            }
            let rel = entry
                .path()
                .strip_prefix(&root)
                .expect("walk stays below root");
            out.push(rel.to_string_lossy().replace('\\', "/"));
        }
        Ok(out)
    }

    fn fetch(&self, base_url: &str, path: &str) -> Result<Vec<u8>, FetchError> {
        std::fs::read(local_root(base_url).join(path)).map_err(|e| FetchError::Resource {
            path: path.to_string(),
            reason: e.to_string(),
        })
    }
}

/// Converts a parsed template into a registry item.
pub fn item_from_template(t: &RedifTemplate) -> Result<ScholarlyItem, String> {
    let kind = ItemKind::from_template_type(&t.template_type)
        .ok_or_else(|| format!("unsupported template type {:?}", t.template_type))?;
    let title = t
        .first("title")
        .filter(|s| !s.trim().is_empty())
        .ok_or("missing Title")?;
    Ok(ScholarlyItem {
        handle: t.handle.clone(),
        title: title.to_string(),
        abstract_text: t.first("abstract").filter(|s| !s.is_empty()).map(str::to_string),
        fulltext: None,
        fulltext_url: t.first("file-url").filter(|s| !s.is_empty()).map(str::to_string),
        author_names: t
            .author_clusters
            .iter()
            .map(|c| c.name().to_string())
            .filter(|n| !n.is_empty())
            .collect(),
        archive_code: t.handle.archive().to_string(),
        kind,
    })
}

fn prefix(location: &str, d: Diagnostic) -> Diagnostic {
    Diagnostic {
        location: format!("{location}: {}", d.location),
        message: d.message,
    }
}

/// Parses one ReDIF document into items, accumulating counts into `report`.
pub fn items_from_text(source: &str, text: &str, report: &mut IngestReport) -> Vec<ScholarlyItem> {
    let regions = template_region_count(text);
    let (templates, diagnostics) = parse_redif(text);
    let mut rejected = regions - templates.len();
    report
        .diagnostics
        .extend(diagnostics.into_iter().map(|d| prefix(source, d)));
    let mut items = Vec::with_capacity(templates.len());
    for t in &templates {
        match item_from_template(t) {
            Ok(item) => items.push(item),
            Err(msg) => {
                rejected += 1;
                report.diagnostics.push(Diagnostic {
                    location: format!("{source}: {}", t.handle),
                    message: msg,
                });
            }
        }
    }
    report.templates_parsed += items.len();
    report.templates_rejected += rejected;
    items
}

/// Enumerates, fetches and parses an archive. Per-file failures become
/// diagnostics; only a failed enumeration aborts. When one handle appears
/// more than once the last template wins, so the returned batch has unique
/// handles and re-applying it is idempotent.
pub fn collect_archive(
    desc: &ArchiveDescriptor,
    fetcher: &dyn ResourceFetcher,
) -> Result<(Vec<ScholarlyItem>, IngestReport), FetchError> {
    let paths = fetcher.enumerate(&desc.base_url)?;
    let mut report = IngestReport::default();
    let mut by_handle: BTreeMap<String, usize> = BTreeMap::new();
    let mut items: Vec<ScholarlyItem> = Vec::new();
    for path in paths {
        let bytes = match fetcher.fetch(&desc.base_url, &path) {
            Ok(b) => b,
            Err(e) => {
                report.diagnostics.push(Diagnostic {
                    location: path.clone(),
                    message: e.to_string(),
                });
                continue;
            }
        };
        report.files_fetched += 1;
        let text = match String::from_utf8(bytes) {
            Ok(t) => t,
            Err(_) => {
                report.diagnostics.push(Diagnostic {
                    location: path.clone(),
                    message: "file is not valid UTF-8; rejected".into(),
                });
                continue;
            }
        };
        for item in items_from_text(&path, &text, &mut report) {
            let key = item.handle.as_str().to_string();
            if let Some(&slot) = by_handle.get(&key) {
                report.diagnostics.push(Diagnostic {
                    location: path.clone(),
                    message: format!("duplicate handle {key}; later template wins"),
                });
                items[slot] = item;
            } else {
                by_handle.insert(key, items.len());
                items.push(item);
            }
        }
    }
    Ok((items, report))
}
