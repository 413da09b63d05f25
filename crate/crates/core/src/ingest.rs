//! Corpus ingestion: decode, normalize, filter, deduplicate, enrich.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, NaiveDateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::exec::Exec;
use crate::text::{codepoint_len, language_ratio, normalize_text, tokenize};

/// Stand-in timestamp for records published without a date. Such records
/// count toward distributions but are skipped by time-indexed metrics.
pub const MISSING_DATE: DateTime<Utc> = DateTime::<Utc>::UNIX_EPOCH;

pub const CORPUS_FILE: &str = "corpus.jsonl";
pub const CLEANING_REPORT_FILE: &str = "cleaning_report.json";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: invalid corpus record: {source}")]
    CorpusRecord {
        path: PathBuf,
        line: usize,
        source: serde_json::Error,
    },
    #[error("unknown input format `{0}` (expected jsonl or csv)")]
    UnknownFormat(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    Jsonl,
    Csv,
}

impl FromStr for InputFormat {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "ndjson" => Ok(InputFormat::Jsonl),
            "csv" => Ok(InputFormat::Csv),
            other => Err(IngestError::UnknownFormat(other.to_string())),
        }
    }
}

/// A decoded but uncleaned input row.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRecord {
    pub source_id: String,
    pub outlet: String,
    pub url: Option<String>,
    pub published_at: Option<DateTime<Utc>>,
    pub section: Option<String>,
    pub headline: String,
    pub body: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewsRecord {
    pub record_id: String,
    pub outlet: String,
    pub published_at: DateTime<Utc>,
    pub section: String,
    pub headline: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body: Option<String>,
    pub content_length: usize,
    pub language_ratio: f64,
}

impl NewsRecord {
    /// Build an enriched record from already-cleaned text.
    pub fn new(
        outlet: impl Into<String>,
        published_at: Option<DateTime<Utc>>,
        section: Option<String>,
        headline: impl Into<String>,
        body: Option<String>,
    ) -> Self {
        let outlet = outlet.into();
        let headline = headline.into();
        let content_length =
            codepoint_len(&headline) + body.as_deref().map(codepoint_len).unwrap_or(0);
        let ratio = match &body {
            Some(b) => language_ratio(&format!("{headline} {b}")),
            None => language_ratio(&headline),
        };
        Self {
            record_id: record_id(&outlet, &headline),
            outlet,
            published_at: published_at.unwrap_or(MISSING_DATE),
            section: section
                .filter(|s| !s.is_empty())
                .unwrap_or_else(|| "unknown".to_string()),
            headline,
            body,
            content_length,
            language_ratio: ratio,
        }
    }

    pub fn has_date(&self) -> bool {
        self.published_at != MISSING_DATE
    }
}

/// Content-derived identifier over the deduplication key, so it is unique
/// within any deduplicated corpus.
pub fn record_id(outlet: &str, headline: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(outlet.as_bytes());
    hasher.update([0x1f]);
    hasher.update(headline.as_bytes());
    hex::encode(&hasher.finalize()[..8])
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestConfig {
    pub min_tokens: usize,
    pub min_chars: usize,
    /// `None` disables language filtering.
    pub min_language_ratio: Option<f64>,
    pub exec: Exec,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            min_tokens: 3,
            min_chars: 10,
            min_language_ratio: Some(0.7),
            exec: Exec::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    Duplicate,
    NonTargetLanguage,
    TooShort,
    EmptyAfterClean,
    Malformed,
}

impl DropReason {
    pub const ALL: [DropReason; 5] = [
        DropReason::Duplicate,
        DropReason::NonTargetLanguage,
        DropReason::TooShort,
        DropReason::EmptyAfterClean,
        DropReason::Malformed,
    ];
}

impl fmt::Display for DropReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DropReason::Duplicate => "duplicate",
            DropReason::NonTargetLanguage => "non_target_language",
            DropReason::TooShort => "too_short",
            DropReason::EmptyAfterClean => "empty_after_clean",
            DropReason::Malformed => "malformed",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Keep,
    Drop(DropReason),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleaningReport {
    pub input_count: u64,
    pub kept_count: u64,
    pub dropped: BTreeMap<DropReason, u64>,
}

impl Default for CleaningReport {
    fn default() -> Self {
        Self {
            input_count: 0,
            kept_count: 0,
            dropped: DropReason::ALL.iter().map(|r| (*r, 0)).collect(),
        }
    }
}

impl CleaningReport {
    fn record_drop(&mut self, reason: DropReason) {
        *self.dropped.entry(reason).or_default() += 1;
    }

    pub fn dropped_total(&self) -> u64 {
        self.dropped.values().sum()
    }

    pub fn is_conserved(&self) -> bool {
        self.input_count == self.kept_count + self.dropped_total()
    }
}

pub fn filter_record(record: &NewsRecord, config: &IngestConfig) -> Verdict {
    if record.headline.is_empty() {
        return Verdict::Drop(DropReason::EmptyAfterClean);
    }
    if tokenize(&record.headline).len() < config.min_tokens
        || codepoint_len(&record.headline) < config.min_chars
    {
        return Verdict::Drop(DropReason::TooShort);
    }
    if let Some(min_ratio) = config.min_language_ratio {
        if record.language_ratio < min_ratio {
            return Verdict::Drop(DropReason::NonTargetLanguage);
        }
    }
    Verdict::Keep
}

/// Keep the first record per `(outlet, headline)`; returns survivors in input
/// order and the number removed.
pub fn deduplicate(records: Vec<NewsRecord>) -> (Vec<NewsRecord>, u64) {
    let mut seen: HashSet<(String, String)> = HashSet::with_capacity(records.len());
    let before = records.len();
    let kept: Vec<NewsRecord> = records
        .into_iter()
        .filter(|r| seen.insert((r.outlet.clone(), r.headline.clone())))
        .collect();
    let removed = (before - kept.len()) as u64;
    (kept, removed)
}

fn clean_raw(raw: &RawRecord) -> NewsRecord {
    let body = raw
        .body
        .as_deref()
        .map(normalize_text)
        .filter(|b| !b.is_empty());
    NewsRecord::new(
        normalize_text(&raw.outlet),
        raw.published_at,
        raw.section.as_deref().map(normalize_text),
        normalize_text(&raw.headline),
        body,
    )
}

/// Normalize, filter and deduplicate decoded rows. `rows` carries `None` for
/// rows that failed to decode.
pub fn clean_records(
    rows: &[Option<RawRecord>],
    config: &IngestConfig,
) -> (Vec<NewsRecord>, CleaningReport) {
    let mut report = CleaningReport {
        input_count: rows.len() as u64,
        ..CleaningReport::default()
    };

    let cleaned = config.exec.map(rows, |row| {
        row.as_ref().map(|raw| {
            let record = clean_raw(raw);
            let verdict = filter_record(&record, config);
            (record, verdict)
        })
    });

    let mut survivors = Vec::with_capacity(cleaned.len());
    for item in cleaned {
        match item {
            None => report.record_drop(DropReason::Malformed),
            Some((_, Verdict::Drop(reason))) => report.record_drop(reason),
            Some((record, Verdict::Keep)) => survivors.push(record),
        }
    }

    let (corpus, duplicates) = deduplicate(survivors);
    *report.dropped.entry(DropReason::Duplicate).or_default() += duplicates;
    report.kept_count = corpus.len() as u64;
    debug_assert!(report.is_conserved());
    (corpus, report)
}

pub fn ingest(
    path: &Path,
    format: InputFormat,
    config: &IngestConfig,
) -> Result<(Vec<NewsRecord>, CleaningReport), IngestError> {
    let bytes = fs::read(path).map_err(|source| IngestError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let rows = match format {
        InputFormat::Jsonl => decode_jsonl(&bytes),
        InputFormat::Csv => decode_csv(&bytes),
    };
    Ok(clean_records(&rows, config))
}

#[derive(Debug, Default, Deserialize)]
struct InputRow {
    #[serde(default)]
    source_id: Option<serde_json::Value>,
    outlet: Option<String>,
    headline: Option<String>,
    #[serde(default)]
    body: Option<String>,
    #[serde(default)]
    published_at: Option<String>,
    #[serde(default)]
    section: Option<String>,
    #[serde(default)]
    url: Option<String>,
}

fn non_empty(s: Option<String>) -> Option<String> {
    s.filter(|v| !v.trim().is_empty())
}

impl InputRow {
    fn into_raw(self, fallback_id: usize) -> Option<RawRecord> {
        let outlet = non_empty(self.outlet)?;
        let headline = self.headline?;
        let published_at = match non_empty(self.published_at) {
            Some(text) => Some(parse_timestamp(&text)?),
            None => None,
        };
        let source_id = match self.source_id {
            Some(serde_json::Value::String(s)) => s,
            Some(serde_json::Value::Number(n)) => n.to_string(),
            _ => fallback_id.to_string(),
        };
        Some(RawRecord {
            source_id,
            outlet: outlet.trim().to_string(),
            url: non_empty(self.url),
            published_at,
            section: non_empty(self.section),
            headline,
            body: non_empty(self.body),
        })
    }
}

/// Accepts RFC 3339, `YYYY-MM-DD HH:MM:SS` and bare dates; naive values are
/// taken as UTC.
pub fn parse_timestamp(text: &str) -> Option<DateTime<Utc>> {
    let text = text.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(text) {
        return Some(dt.with_timezone(&Utc));
    }
    for fmt in ["%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S"] {
        if let Ok(naive) = NaiveDateTime::parse_from_str(text, fmt) {
            return Some(Utc.from_utc_datetime(&naive));
        }
    }
    NaiveDate::parse_from_str(text, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .map(|naive| Utc.from_utc_datetime(&naive))
}

fn decode_jsonl(bytes: &[u8]) -> Vec<Option<RawRecord>> {
    bytes
        .split(|b| *b == b'\n')
        .enumerate()
        .filter(|(_, line)| !line.iter().all(u8::is_ascii_whitespace))
        .map(|(idx, line)| {
            let line = std::str::from_utf8(line).ok()?;
            let row: InputRow = serde_json::from_str(line).ok()?;
            row.into_raw(idx + 1)
        })
        .collect()
}

fn decode_csv(bytes: &[u8]) -> Vec<Option<RawRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(bytes);
    let headers = match reader.headers() {
        Ok(h) => h.clone(),
        Err(_) => return Vec::new(),
    };
    let column = |name: &str| headers.iter().position(|h| h.trim() == name);
    let (outlet, headline, body, published_at, section, url, source_id) = (
        column("outlet"),
        column("headline"),
        column("body"),
        column("published_at"),
        column("section"),
        column("url"),
        column("source_id"),
    );

    reader
        .byte_records()
        .enumerate()
        .map(|(idx, rec)| {
            let rec = rec.ok()?;
            if rec.len() != headers.len() {
                return None;
            }
            let field = |col: Option<usize>| -> Option<Option<String>> {
                match col {
                    None => Some(None),
                    Some(i) => std::str::from_utf8(&rec[i]).ok().map(|s| Some(s.to_string())),
                }
            };
            let row = InputRow {
                source_id: field(source_id)?.map(serde_json::Value::String),
                outlet: field(outlet)?,
                headline: field(headline)?,
                body: field(body)?,
                published_at: field(published_at)?,
                section: field(section)?,
                url: field(url)?,
            };
            row.into_raw(idx + 1)
        })
        .collect()
}

/// Write `corpus.jsonl` and `cleaning_report.json` into `dir`.
pub fn write_corpus(
    dir: &Path,
    corpus: &[NewsRecord],
    report: &CleaningReport,
) -> Result<PathBuf, IngestError> {
    let werr = |path: &Path| {
        let path = path.to_path_buf();
        move |source| IngestError::Write { path, source }
    };
    fs::create_dir_all(dir).map_err(werr(dir))?;
    let corpus_path = dir.join(CORPUS_FILE);
    let file = fs::File::create(&corpus_path).map_err(werr(&corpus_path))?;
    let mut out = BufWriter::new(file);
    for record in corpus {
        let line = serde_json::to_string(record).expect("records serialize");
        writeln!(out, "{line}").map_err(werr(&corpus_path))?;
    }
    out.flush().map_err(werr(&corpus_path))?;

    let report_path = dir.join(CLEANING_REPORT_FILE);
    let text = serde_json::to_string_pretty(report).expect("report serializes");
    fs::write(&report_path, text + "\n").map_err(werr(&report_path))?;
    Ok(corpus_path)
}

pub fn read_corpus(path: &Path) -> Result<Vec<NewsRecord>, IngestError> {
    let file = fs::File::open(path).map_err(|source| IngestError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| IngestError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|source| IngestError::CorpusRecord {
            path: path.to_path_buf(),
            line: idx + 1,
            source,
        })?;
        out.push(record);
    }
    Ok(out)
}
