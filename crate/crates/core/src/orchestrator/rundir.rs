//! On-disk layout of a run directory and recovery of its state.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use base64::Engine;
use chrono::{DateTime, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::OrchestratorError;
use crate::annotation::EmotionAnnotation;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const ANNOTATIONS_FILE: &str = "annotations.jsonl";
pub const FAILURES_FILE: &str = "failures.jsonl";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const PREVIOUS_CHECKPOINT_FILE: &str = "checkpoint.prev.json";
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Running,
    Complete,
    Failed,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunCounts {
    pub succeeded: u64,
    pub failed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndpointInfo {
    pub id: String,
    pub url: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub workers: usize,
    pub checkpoint_every: u64,
    pub max_item_retries: u32,
    pub temperature: f64,
    pub max_tokens: u32,
    pub max_body_chars: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub corpus_path: PathBuf,
    pub corpus_sha256: String,
    pub corpus_len: u64,
    pub model_id: String,
    pub endpoints: Vec<EndpointInfo>,
    pub created_at: DateTime<Utc>,
    pub status: RunStatus,
    pub counts: RunCounts,
    pub settings: RunSettings,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    InvalidInput,
    MalformedJson,
    UnknownLabel,
    BadProbabilityMass,
    MissingField,
    ExhaustedRetries,
}

impl FailureReason {
    pub fn from_validation_kind(kind: &str) -> Self {
        match kind {
            "unknown_label" => FailureReason::UnknownLabel,
            "bad_probability_mass" => FailureReason::BadProbabilityMass,
            "missing_field" => FailureReason::MissingField,
            _ => FailureReason::MalformedJson,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub record_id: String,
    pub reason: FailureReason,
    pub detail: String,
    pub attempts: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailedEntry {
    pub record_id: String,
    pub reason: FailureReason,
}

/// Durable progress marker, rewritten atomically.
///
/// `completed` is a base64 bitmap over corpus positions (bit `i % 8` of byte
/// `i / 8`) of records with an annotation. `high_water_mark` counts the
/// leading positions that are finished, successfully or not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunCheckpoint {
    pub run_id: String,
    pub corpus_len: u64,
    pub high_water_mark: u64,
    pub completed: String,
    pub completed_count: u64,
    pub per_endpoint_counts: BTreeMap<String, u64>,
    pub failed: Vec<FailedEntry>,
    pub annotations_offset: u64,
    pub failures_offset: u64,
    pub latency_sum_ms: f64,
    pub elapsed_seconds: f64,
    pub sessions: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub run_id: String,
    pub total_items: u64,
    pub succeeded: u64,
    pub failed: u64,
    pub mean_latency_ms: Option<f64>,
    pub throughput_items_per_min: f64,
    pub per_endpoint_counts: BTreeMap<String, u64>,
    pub wall_clock_seconds: f64,
    pub sessions: u32,
}

pub fn encode_bitmap(bits: &[bool]) -> String {
    let mut bytes = vec![0u8; bits.len().div_ceil(8)];
    for (i, _) in bits.iter().enumerate().filter(|(_, b)| **b) {
        bytes[i / 8] |= 1 << (i % 8);
    }
    base64::engine::general_purpose::STANDARD.encode(bytes)
}

pub fn decode_bitmap(text: &str, len: usize) -> Option<Vec<bool>> {
    let bytes = base64::engine::general_purpose::STANDARD.decode(text).ok()?;
    if bytes.len() != len.div_ceil(8) {
        return None;
    }
    let bits: Vec<bool> = (0..len).map(|i| bytes[i / 8] & (1 << (i % 8)) != 0).collect();
    // padding bits past `len` must be clear
    let set: u32 = bytes.iter().map(|b| b.count_ones()).sum();
    (set as usize == bits.iter().filter(|b| **b).count()).then_some(bits)
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(io::Error) -> OrchestratorError + '_ {
    move |source| OrchestratorError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub(crate) fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, OrchestratorError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| OrchestratorError::Json {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Write via a temporary file and rename, so readers see old or new only.
pub(crate) fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> Result<(), OrchestratorError> {
    let tmp = path.with_extension("json.tmp");
    let mut text = serde_json::to_vec_pretty(value).expect("run files serialize");
    text.push(b'\n');
    let mut f = File::create(&tmp).map_err(io_err(&tmp))?;
    f.write_all(&text).map_err(io_err(&tmp))?;
    f.sync_all().map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

pub fn read_manifest(run_dir: &Path) -> Result<RunManifest, OrchestratorError> {
    read_json(&run_dir.join(MANIFEST_FILE))
}

pub fn read_report(run_dir: &Path) -> Result<RunReport, OrchestratorError> {
    read_json(&run_dir.join(REPORT_FILE))
}

/// Complete, parseable lines of a JSONL file.
pub struct JsonlScan<T> {
    pub items: Vec<T>,
    /// Byte length of the valid prefix.
    pub valid_len: u64,
    pub file_len: u64,
}

/// Scan a JSONL file, tolerating a torn final line. An unparseable line
/// followed by more data is corruption.
pub fn scan_jsonl<T: DeserializeOwned>(path: &Path) -> Result<JsonlScan<T>, OrchestratorError> {
    let mut bytes = Vec::new();
    match File::open(path) {
        Ok(mut f) => {
            f.read_to_end(&mut bytes).map_err(io_err(path))?;
        }
        Err(e) if e.kind() == io::ErrorKind::NotFound => {}
        Err(e) => return Err(io_err(path)(e)),
    }
    let mut items = Vec::new();
    let mut offset = 0usize;
    while offset < bytes.len() {
        let end = bytes[offset..].iter().position(|b| *b == b'\n').map(|p| offset + p);
        let line = &bytes[offset..end.unwrap_or(bytes.len())];
        let parsed = serde_json::from_slice::<T>(line);
        match (parsed, end) {
            (Ok(item), Some(end)) => {
                items.push(item);
                offset = end + 1;
            }
            (_, None) => break,
            (Err(e), Some(end)) if end + 1 < bytes.len() => {
                return Err(OrchestratorError::CorruptRun {
                    file: path.to_path_buf(),
                    offset: offset as u64,
                    reason: e.to_string(),
                })
            }
            (Err(_), Some(_)) => break,
        }
    }
    Ok(JsonlScan {
        items,
        valid_len: offset as u64,
        file_len: bytes.len() as u64,
    })
}

pub fn read_annotations(run_dir: &Path) -> Result<Vec<EmotionAnnotation>, OrchestratorError> {
    Ok(scan_jsonl(&run_dir.join(ANNOTATIONS_FILE))?.items)
}

pub fn read_failures(run_dir: &Path) -> Result<Vec<FailureRecord>, OrchestratorError> {
    Ok(scan_jsonl(&run_dir.join(FAILURES_FILE))?.items)
}

pub(crate) fn truncate_to(path: &Path, len: u64) -> Result<(), OrchestratorError> {
    let f = OpenOptions::new().write(true).open(path).map_err(io_err(path))?;
    f.set_len(len).map_err(io_err(path))?;
    f.sync_all().map_err(io_err(path))
}

/// Progress rebuilt from the output files.
#[derive(Debug, Clone)]
pub(crate) struct RecoveredState {
    pub completed: Vec<bool>,
    pub failed: Vec<Option<FailureReason>>,
    pub per_endpoint_counts: BTreeMap<String, u64>,
    pub latency_sum_ms: f64,
}

impl RecoveredState {
    pub fn empty(len: usize) -> Self {
        Self {
            completed: vec![false; len],
            failed: vec![None; len],
            per_endpoint_counts: BTreeMap::new(),
            latency_sum_ms: 0.0,
        }
    }

    pub fn is_done(&self, pos: usize) -> bool {
        self.completed[pos] || self.failed[pos].is_some()
    }

    pub fn succeeded(&self) -> u64 {
        self.completed.iter().filter(|b| **b).count() as u64
    }

    pub fn failed_count(&self) -> u64 {
        self.failed.iter().filter(|f| f.is_some()).count() as u64
    }

    pub fn high_water_mark(&self) -> u64 {
        (0..self.completed.len()).take_while(|p| self.is_done(*p)).count() as u64
    }
}

/// Rebuild state from `annotations.jsonl` and `failures.jsonl`, cutting off
/// a torn trailing line in either. Lines for records already seen are
/// ignored, so the first write of a record wins.
pub(crate) fn recover(
    run_dir: &Path,
    positions: &HashMap<String, usize>,
) -> Result<(RecoveredState, u64, u64), OrchestratorError> {
    let mut state = RecoveredState::empty(positions.len());
    let ann_path = run_dir.join(ANNOTATIONS_FILE);
    let scan = scan_jsonl::<EmotionAnnotation>(&ann_path)?;
    if scan.valid_len < scan.file_len {
        tracing::warn!(file = %ann_path.display(), cut = scan.file_len - scan.valid_len, "truncating torn line");
        truncate_to(&ann_path, scan.valid_len)?;
    }
    for ann in scan.items {
        let pos = *positions.get(&ann.record_id).ok_or_else(|| OrchestratorError::CorruptRun {
            file: ann_path.clone(),
            offset: scan.valid_len,
            reason: format!("record {} is not in the corpus", ann.record_id),
        })?;
        if state.completed[pos] {
            tracing::warn!(record_id = %ann.record_id, "ignoring duplicate annotation line");
            continue;
        }
        state.completed[pos] = true;
        *state.per_endpoint_counts.entry(ann.endpoint_id.clone()).or_default() += 1;
        state.latency_sum_ms += ann.latency_ms;
    }

    let fail_path = run_dir.join(FAILURES_FILE);
    let fscan = scan_jsonl::<FailureRecord>(&fail_path)?;
    if fscan.valid_len < fscan.file_len {
        truncate_to(&fail_path, fscan.valid_len)?;
    }
    for f in fscan.items {
        let pos = *positions.get(&f.record_id).ok_or_else(|| OrchestratorError::CorruptRun {
            file: fail_path.clone(),
            offset: fscan.valid_len,
            reason: format!("record {} is not in the corpus", f.record_id),
        })?;
        if state.is_done(pos) {
            continue;
        }
        state.failed[pos] = Some(f.reason);
    }
    Ok((state, scan.valid_len, fscan.valid_len))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bitmap_round_trip() {
        let bits: Vec<bool> = (0..19).map(|i| i % 3 == 0).collect();
        assert_eq!(decode_bitmap(&encode_bitmap(&bits), 19).unwrap(), bits);
        assert!(decode_bitmap(&encode_bitmap(&bits), 30).is_none());
        assert!(decode_bitmap("not base64!", 19).is_none());
    }

    #[test]
    fn torn_tail_is_tolerated_but_inner_garbage_is_not() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.jsonl");
        fs::write(&p, "{\"a\":1}\n{\"a\":2}\n{\"a\":").unwrap();
        let s = scan_jsonl::<serde_json::Value>(&p).unwrap();
        assert_eq!(s.items.len(), 2);
        assert_eq!(s.valid_len, 16);
        fs::write(&p, "{\"a\":1}\ngarbage\n{\"a\":3}\n").unwrap();
        assert!(matches!(
            scan_jsonl::<serde_json::Value>(&p),
            Err(OrchestratorError::CorruptRun { offset: 8, .. })
        ));
    }
}
