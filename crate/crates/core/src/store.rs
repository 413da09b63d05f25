//! Read-side index over a store root:
//!
//! ```text
//! <root>/corpus/*.jsonl
//! <root>/runs/<run_id>/manifest.json, annotations.jsonl, report.json
//! <root>/runs/<run_id>/metrics/*.json
//! ```
//!
//! Opening builds an in-memory index of every run and loads the newest
//! complete one. Runs that fail their consistency checks are listed with
//! status `failed` and a reason, never hidden.

use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::annotation::EmotionAnnotation;
use crate::ingest::{read_corpus, NewsRecord};
use crate::metrics::{
    affect_of, read_artifact, DistributionArtifact, MatchedStoryGroup, MatchesArtifact,
    PolarizationReport, ProfilesArtifact, SchemaError, TrendsArtifact,
};
use crate::orchestrator::{
    read_manifest, scan_jsonl, FailureRecord, RunManifest, RunStatus, ANNOTATIONS_FILE,
    FAILURES_FILE,
};
use crate::taxonomy::{AffectScores, CoarseClass, EmotionLabel, Taxonomy};

pub const CORPUS_DIR: &str = "corpus";
pub const RUNS_DIR: &str = "runs";
pub const METRICS_DIR: &str = "metrics";
pub const MAX_LIMIT: usize = 1_000;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("no run {0}")]
    UnknownRun(String),
    #[error("run {run_id}: {reason}")]
    BadRun { run_id: String, reason: String },
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error("invalid `{param}`: {message}")]
    InvalidFilter { param: &'static str, message: String },
}

#[derive(Debug, Clone, Serialize)]
pub struct RunEntry {
    pub run_id: String,
    pub dir: PathBuf,
    pub status: RunStatus,
    /// Why a run is considered failed.
    pub problem: Option<String>,
    pub manifest: Option<RunManifest>,
}

/// Every metric artifact of a run; `None` marks a missing file.
#[derive(Debug, Clone, Default)]
pub struct Aggregates {
    pub distribution: Option<DistributionArtifact>,
    pub profiles: Option<ProfilesArtifact>,
    pub polarization: Option<PolarizationReport>,
    pub trends: Option<TrendsArtifact>,
    pub matches: Option<MatchesArtifact>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Headline {
    pub record: NewsRecord,
    pub annotation: EmotionAnnotation,
    pub affect: AffectScores,
    pub coarse: CoarseClass,
}

/// The run being served: joined headlines in serving order plus aggregates.
#[derive(Debug, Clone)]
pub struct LoadedRun {
    pub run_id: String,
    pub manifest: RunManifest,
    pub aggregates: Aggregates,
    /// Sorted by `published_at` descending, then `record_id` ascending.
    headlines: Vec<Headline>,
    by_id: HashMap<String, usize>,
    group_of: HashMap<String, usize>,
}

impl LoadedRun {
    pub fn headlines(&self) -> &[Headline] {
        &self.headlines
    }

    pub fn headline(&self, record_id: &str) -> Option<&Headline> {
        self.by_id.get(record_id).map(|i| &self.headlines[*i])
    }

    /// The matched story group containing a record, if any.
    pub fn group_of(&self, record_id: &str) -> Option<&MatchedStoryGroup> {
        let i = *self.group_of.get(record_id)?;
        self.aggregates.matches.as_ref().map(|m| &m.groups[i])
    }

    pub fn query(&self, filter: &QueryFilter) -> Result<Page<'_>, StoreError> {
        filter.validate()?;
        let matching: Vec<&Headline> = self.headlines.iter().filter(|h| filter.matches(h)).collect();
        let total = matching.len();
        let items = matching
            .into_iter()
            .skip(filter.offset)
            .take(filter.limit)
            .collect();
        Ok(Page {
            total,
            offset: filter.offset,
            limit: filter.limit,
            items,
        })
    }
}

/// Conjunctive filter. Unknown outlets match nothing; unknown emotion names
/// fail validation.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryFilter {
    pub outlet: Option<String>,
    /// Coarse class name.
    pub emotion: Option<String>,
    /// Fine label name.
    pub label: Option<String>,
    pub from: Option<DateTime<Utc>>,
    pub to: Option<DateTime<Utc>>,
    pub limit: usize,
    pub offset: usize,
}

impl Default for QueryFilter {
    fn default() -> Self {
        Self {
            outlet: None,
            emotion: None,
            label: None,
            from: None,
            to: None,
            limit: 50,
            offset: 0,
        }
    }
}

impl QueryFilter {
    pub fn validate(&self) -> Result<(), StoreError> {
        if !(1..=MAX_LIMIT).contains(&self.limit) {
            return Err(StoreError::InvalidFilter {
                param: "limit",
                message: format!("{} is outside [1, {MAX_LIMIT}]", self.limit),
            });
        }
        if let Some(e) = &self.emotion {
            if e.to_ascii_lowercase().parse::<CoarseClass>().is_err() {
                return Err(StoreError::InvalidFilter {
                    param: "emotion",
                    message: format!("`{e}` is not a coarse emotion class"),
                });
            }
        }
        if let Some(l) = &self.label {
            if l.to_ascii_lowercase().parse::<EmotionLabel>().is_err() {
                return Err(StoreError::InvalidFilter {
                    param: "label",
                    message: format!("`{l}` is not an emotion label"),
                });
            }
        }
        if let (Some(from), Some(to)) = (self.from, self.to) {
            if from > to {
                return Err(StoreError::InvalidFilter {
                    param: "from",
                    message: "is after `to`".into(),
                });
            }
        }
        Ok(())
    }

    pub fn matches(&self, h: &Headline) -> bool {
        if self.outlet.as_deref().is_some_and(|o| o != h.record.outlet) {
            return false;
        }
        if self.emotion.as_deref().is_some_and(|e| !e.eq_ignore_ascii_case(h.coarse.as_str())) {
            return false;
        }
        if self
            .label
            .as_deref()
            .is_some_and(|l| !l.eq_ignore_ascii_case(h.annotation.dominant.as_str()))
        {
            return false;
        }
        if self.from.is_some() || self.to.is_some() {
            if !h.record.has_date() {
                return false;
            }
            let at = h.record.published_at;
            if self.from.is_some_and(|f| at < f) || self.to.is_some_and(|t| at > t) {
                return false;
            }
        }
        true
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Page<'a> {
    /// Size of the full filtered set.
    pub total: usize,
    pub offset: usize,
    pub limit: usize,
    pub items: Vec<&'a Headline>,
}

/// Shareable read-only handle; safe for concurrent readers once opened.
#[derive(Debug)]
pub struct Store {
    root: PathBuf,
    runs: Vec<RunEntry>,
    current: Option<LoadedRun>,
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn sha256_of(path: &Path) -> io::Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

/// Check a run directory without loading it fully.
fn inspect_run(dir: &Path) -> RunEntry {
    let run_id = dir.file_name().unwrap_or_default().to_string_lossy().into_owned();
    let failed = |problem: String, manifest: Option<RunManifest>| RunEntry {
        run_id: run_id.clone(),
        dir: dir.to_path_buf(),
        status: RunStatus::Failed,
        problem: Some(problem),
        manifest,
    };
    let manifest = match read_manifest(dir) {
        Ok(m) => m,
        Err(e) => return failed(format!("unreadable manifest: {e}"), None),
    };
    if manifest.status == RunStatus::Complete {
        let anns = match scan_jsonl::<EmotionAnnotation>(&dir.join(ANNOTATIONS_FILE)) {
            Ok(s) => s,
            Err(e) => return failed(e.to_string(), Some(manifest)),
        };
        if anns.valid_len != anns.file_len || anns.items.len() as u64 != manifest.counts.succeeded {
            let reason = format!(
                "manifest counts {} annotations, file has {} complete lines",
                manifest.counts.succeeded,
                anns.items.len()
            );
            return failed(reason, Some(manifest));
        }
        let fails = scan_jsonl::<FailureRecord>(&dir.join(FAILURES_FILE));
        match fails {
            Ok(f) if f.items.len() as u64 == manifest.counts.failed && f.valid_len == f.file_len => {}
            Ok(f) => {
                let reason = format!(
                    "manifest counts {} failures, file has {}",
                    manifest.counts.failed,
                    f.items.len()
                );
                return failed(reason, Some(manifest));
            }
            Err(e) => return failed(e.to_string(), Some(manifest)),
        }
    }
    RunEntry {
        run_id,
        dir: dir.to_path_buf(),
        status: manifest.status,
        problem: None,
        manifest: Some(manifest),
    }
}

/// Parse and schema-check every metric artifact of a run directory.
pub fn load_aggregates_from(run_dir: &Path) -> Result<Aggregates, StoreError> {
    let dir = run_dir.join(METRICS_DIR);
    Ok(Aggregates {
        distribution: read_artifact(&dir)?,
        profiles: read_artifact(&dir)?,
        polarization: read_artifact(&dir)?,
        trends: read_artifact(&dir)?,
        matches: read_artifact(&dir)?,
    })
}

impl Store {
    /// Index `root`, creating it when absent.
    pub fn open(root: &Path) -> Result<Self, StoreError> {
        fs::create_dir_all(root).map_err(io_err(root))?;
        let runs_dir = root.join(RUNS_DIR);
        let mut runs = Vec::new();
        match fs::read_dir(&runs_dir) {
            Ok(entries) => {
                for entry in entries {
                    let entry = entry.map_err(io_err(&runs_dir))?;
                    if entry.file_type().map_err(io_err(&runs_dir))?.is_dir() {
                        runs.push(inspect_run(&entry.path()));
                    }
                }
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => {}
            Err(e) => return Err(io_err(&runs_dir)(e)),
        }
        // newest first; run ids are UTC timestamps
        runs.sort_by(|a, b| b.run_id.cmp(&a.run_id));

        let mut store = Store {
            root: root.to_path_buf(),
            runs,
            current: None,
        };
        let taxonomy = Taxonomy::default();
        for i in 0..store.runs.len() {
            if store.runs[i].status != RunStatus::Complete {
                continue;
            }
            match store.load_run(&store.runs[i], &taxonomy) {
                Ok(run) => {
                    store.current = Some(run);
                    break;
                }
                Err(e) => {
                    tracing::warn!(run = %store.runs[i].run_id, error = %e, "run cannot be served");
                    store.runs[i].status = RunStatus::Failed;
                    store.runs[i].problem = Some(e.to_string());
                }
            }
        }
        Ok(store)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn runs(&self) -> &[RunEntry] {
        &self.runs
    }

    /// The newest complete run that loaded cleanly.
    pub fn current(&self) -> Option<&LoadedRun> {
        self.current.as_ref()
    }

    pub fn load_aggregates(&self, run_id: &str) -> Result<Aggregates, StoreError> {
        let entry = self
            .runs
            .iter()
            .find(|r| r.run_id == run_id)
            .ok_or_else(|| StoreError::UnknownRun(run_id.to_string()))?;
        load_aggregates_from(&entry.dir)
    }

    /// Corpus file of a run: the manifest path if its hash still matches,
    /// else any file under `corpus/` with that hash.
    fn find_corpus(&self, manifest: &RunManifest) -> Option<PathBuf> {
        let wanted = &manifest.corpus_sha256;
        if sha256_of(&manifest.corpus_path).ok().as_ref() == Some(wanted) {
            return Some(manifest.corpus_path.clone());
        }
        let mut candidates: Vec<PathBuf> = fs::read_dir(self.root.join(CORPUS_DIR))
            .ok()?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        candidates.sort();
        candidates
            .into_iter()
            .find(|p| sha256_of(p).ok().as_ref() == Some(wanted))
    }

    fn load_run(&self, entry: &RunEntry, taxonomy: &Taxonomy) -> Result<LoadedRun, StoreError> {
        let bad = |reason: String| StoreError::BadRun {
            run_id: entry.run_id.clone(),
            reason,
        };
        let manifest = entry.manifest.clone().ok_or_else(|| bad("no manifest".into()))?;
        let corpus_path = self
            .find_corpus(&manifest)
            .ok_or_else(|| bad(format!("corpus with sha256 {} not found", manifest.corpus_sha256)))?;
        let corpus = read_corpus(&corpus_path).map_err(|e| bad(e.to_string()))?;
        let mut records: HashMap<String, NewsRecord> =
            corpus.into_iter().map(|r| (r.record_id.clone(), r)).collect();
        let annotations = scan_jsonl::<EmotionAnnotation>(&entry.dir.join(ANNOTATIONS_FILE))
            .map_err(|e| bad(e.to_string()))?
            .items;

        let mut headlines = Vec::with_capacity(annotations.len());
        for annotation in annotations {
            let record = records
                .remove(&annotation.record_id)
                .ok_or_else(|| bad(format!("annotation {} joins no corpus record", annotation.record_id)))?;
            headlines.push(Headline {
                affect: affect_of(&annotation.probabilities, taxonomy),
                coarse: taxonomy.coarse_of(annotation.dominant),
                record,
                annotation,
            });
        }
        headlines.sort_by(|a, b| {
            b.record
                .published_at
                .cmp(&a.record.published_at)
                .then_with(|| a.record.record_id.cmp(&b.record.record_id))
        });
        let by_id = headlines
            .iter()
            .enumerate()
            .map(|(i, h)| (h.record.record_id.clone(), i))
            .collect();

        let aggregates = load_aggregates_from(&entry.dir)?;
        let group_of = aggregates
            .matches
            .iter()
            .flat_map(|m| m.groups.iter().enumerate())
            .flat_map(|(i, g)| g.record_ids.iter().map(move |id| (id.clone(), i)))
            .collect();
        Ok(LoadedRun {
            run_id: entry.run_id.clone(),
            manifest,
            aggregates,
            headlines,
            by_id,
            group_of,
        })
    }
}

/// Parse `YYYY-MM-DD` or RFC 3339. A bare date used as an upper bound
/// covers the whole day.
pub fn parse_bound(text: &str, end_of_day: bool) -> Option<DateTime<Utc>> {
    if let Ok(t) = DateTime::parse_from_rfc3339(text) {
        return Some(t.with_timezone(&Utc));
    }
    let date = chrono::NaiveDate::parse_from_str(text, "%Y-%m-%d").ok()?;
    let time = if end_of_day {
        date.and_hms_nano_opt(23, 59, 59, 999_999_999)?
    } else {
        date.and_hms_opt(0, 0, 0)?
    };
    Some(time.and_utc())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_root_has_no_runs() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(&dir.path().join("fresh")).unwrap();
        assert!(store.runs().is_empty());
        assert!(store.current().is_none());
    }

    #[test]
    fn limit_bounds() {
        let mut f = QueryFilter::default();
        f.limit = 0;
        assert!(matches!(f.validate(), Err(StoreError::InvalidFilter { param: "limit", .. })));
        f.limit = 1_001;
        assert!(f.validate().is_err());
        f.limit = 1_000;
        assert!(f.validate().is_ok());
    }

    #[test]
    fn date_bounds() {
        let end = parse_bound("2024-03-01", true).unwrap();
        assert_eq!(end.to_rfc3339(), "2024-03-01T23:59:59.999999999+00:00");
        assert!(parse_bound("2024-13-01", false).is_none());
        assert!(parse_bound("2024-03-01T10:00:00+06:00", false).is_some());
    }
}
