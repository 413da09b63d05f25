use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicU32, AtomicUsize, Ordering};
use std::sync::{mpsc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use chrono::Utc;
use sha2::{Digest, Sha256};

use super::pool::EndpointPool;
use super::prompt::{build_prompt, InferenceRequest, DEFAULT_MAX_BODY_CHARS};
use super::rundir::*;
use super::transport::{Endpoint, TransportError};
use super::OrchestratorError;
use crate::annotation::{parse_and_validate, EmotionAnnotation, ValidationError};
use crate::ingest::{read_corpus, NewsRecord};

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub workers: usize,
    pub checkpoint_every: u64,
    /// Attempts per item across endpoints, counting the first.
    pub max_item_retries: u32,
    pub max_consecutive_failures: u32,
    pub backoff_base: Duration,
    pub backoff_cap: Duration,
    /// Pool recoveries without an intervening success before giving up.
    pub max_recovery_rounds: u32,
    pub model_id: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub max_body_chars: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            workers: 6,
            checkpoint_every: 500,
            max_item_retries: 3,
            max_consecutive_failures: 3,
            backoff_base: Duration::from_secs(1),
            backoff_cap: Duration::from_secs(60),
            max_recovery_rounds: 10,
            model_id: "gemma3:4b".to_string(),
            temperature: 0.0,
            max_tokens: 256,
            max_body_chars: DEFAULT_MAX_BODY_CHARS,
        }
    }
}

impl RunConfig {
    fn settings(&self) -> RunSettings {
        RunSettings {
            workers: self.workers,
            checkpoint_every: self.checkpoint_every,
            max_item_retries: self.max_item_retries,
            temperature: self.temperature,
            max_tokens: self.max_tokens,
            max_body_chars: self.max_body_chars,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Progress {
    /// Records written in this session.
    pub written: u64,
    pub succeeded: u64,
    pub failed: u64,
}

type Observer = Box<dyn Fn(&Progress, &RunControl) + Send + Sync>;

/// Stop and crash switches for a running batch, plus an optional observer
/// called by the writer after every record it persists.
#[derive(Default)]
pub struct RunControl {
    stop: AtomicBool,
    crash: AtomicBool,
    observer: Option<Observer>,
}

impl RunControl {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_observer(f: impl Fn(&Progress, &RunControl) + Send + Sync + 'static) -> Self {
        Self {
            observer: Some(Box::new(f)),
            ..Self::default()
        }
    }

    /// Finish in-flight items, write a checkpoint and return.
    pub fn request_stop(&self) {
        self.stop.store(true, Ordering::SeqCst);
    }

    /// Abandon the run as if the process died: buffered output is cut
    /// mid-line and no checkpoint is written.
    pub fn simulate_crash(&self) {
        self.crash.store(true, Ordering::SeqCst);
        self.stop.store(true, Ordering::SeqCst);
    }

    fn stopping(&self) -> bool {
        self.stop.load(Ordering::SeqCst)
    }

    fn crashed(&self) -> bool {
        self.crash.load(Ordering::SeqCst)
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub run_dir: PathBuf,
    pub report: RunReport,
    /// Every corpus record is annotated or failed.
    pub complete: bool,
}

/// Why an input cannot be sent to a model: replacement characters left by
/// lossy decoding, noncharacters, or control characters.
pub fn invalid_input(text: &str) -> Option<String> {
    text.chars().enumerate().find_map(|(i, c)| {
        let cp = c as u32;
        let bad = c == '\u{FFFD}'
            || (0xFDD0..=0xFDEF).contains(&cp)
            || cp & 0xFFFE == 0xFFFE
            || (c.is_control() && !c.is_whitespace());
        bad.then(|| format!("U+{cp:04X} at character {i}"))
    })
}

fn hash_file(path: &Path) -> Result<String, OrchestratorError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn positions_of(corpus: &[NewsRecord]) -> Result<HashMap<String, usize>, OrchestratorError> {
    let mut positions = HashMap::with_capacity(corpus.len());
    for (i, r) in corpus.iter().enumerate() {
        if positions.insert(r.record_id.clone(), i).is_some() {
            return Err(OrchestratorError::DuplicateRecordId(r.record_id.clone()));
        }
    }
    Ok(positions)
}

fn new_run_dir(root: &Path) -> Result<(String, PathBuf), OrchestratorError> {
    fs::create_dir_all(root).map_err(io_err(root))?;
    let stamp = Utc::now().format("%Y%m%dT%H%M%S%.3fZ").to_string();
    for n in 0u32.. {
        let id = if n == 0 { stamp.clone() } else { format!("{stamp}-{n}") };
        let dir = root.join(&id);
        match fs::create_dir(&dir) {
            Ok(()) => return Ok((id, dir)),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(io_err(&dir)(e)),
        }
    }
    unreachable!()
}

/// Classify every record of a corpus into a new timestamped directory under
/// `run_root`.
pub fn run_batch(
    corpus_path: &Path,
    run_root: &Path,
    endpoints: Vec<Endpoint>,
    config: &RunConfig,
    control: &RunControl,
) -> Result<RunOutcome, OrchestratorError> {
    if endpoints.is_empty() {
        return Err(OrchestratorError::NoEndpoints);
    }
    let corpus = read_corpus(corpus_path)?;
    positions_of(&corpus)?;
    let (run_id, run_dir) = new_run_dir(run_root)?;
    let manifest = RunManifest {
        run_id: run_id.clone(),
        corpus_path: fs::canonicalize(corpus_path).map_err(io_err(corpus_path))?,
        corpus_sha256: hash_file(corpus_path)?,
        corpus_len: corpus.len() as u64,
        model_id: config.model_id.clone(),
        endpoints: endpoints
            .iter()
            .map(|e| EndpointInfo {
                id: e.id.clone(),
                url: e.url.clone(),
            })
            .collect(),
        created_at: Utc::now(),
        status: RunStatus::Running,
        counts: RunCounts::default(),
        settings: config.settings(),
    };
    write_json_atomic(&run_dir.join(MANIFEST_FILE), &manifest)?;
    for f in [ANNOTATIONS_FILE, FAILURES_FILE] {
        let p = run_dir.join(f);
        File::create(&p).map_err(io_err(&p))?;
    }
    let state = RecoveredState::empty(corpus.len());
    let session = Session {
        run_dir,
        manifest,
        corpus,
        endpoints,
        config,
        control,
        elapsed_before: 0.0,
        sessions: 1,
    };
    session.write_checkpoint(&state, 0, 0, 0.0)?;
    session.execute(state, 0, 0)
}

/// Continue an interrupted run. Records already present in the output files
/// are not sent again; a completed run is returned unchanged.
pub fn resume(
    run_dir: &Path,
    endpoints: Vec<Endpoint>,
    config: &RunConfig,
    control: &RunControl,
) -> Result<RunOutcome, OrchestratorError> {
    let manifest = read_manifest(run_dir)?;
    if manifest.status == RunStatus::Complete {
        if let Ok(report) = read_report(run_dir) {
            return Ok(RunOutcome {
                run_dir: run_dir.to_path_buf(),
                report,
                complete: true,
            });
        }
    }
    let checkpoint = load_checkpoint(run_dir)?;
    let found = hash_file(&manifest.corpus_path)?;
    if found != manifest.corpus_sha256 {
        return Err(OrchestratorError::CorpusChanged {
            expected: manifest.corpus_sha256.clone(),
            found,
        });
    }
    let corpus = read_corpus(&manifest.corpus_path)?;
    let positions = positions_of(&corpus)?;
    let corrupt = |reason: String| OrchestratorError::CorruptCheckpoint {
        path: run_dir.join(CHECKPOINT_FILE),
        last_valid_offset: Some(checkpoint.annotations_offset),
        reason,
    };
    if checkpoint.corpus_len != corpus.len() as u64 {
        return Err(corrupt("corpus length differs from the checkpoint".into()));
    }
    let ann_len = fs::metadata(run_dir.join(ANNOTATIONS_FILE)).map(|m| m.len()).unwrap_or(0);
    if ann_len < checkpoint.annotations_offset {
        return Err(corrupt(format!(
            "annotations file is {ann_len} bytes, shorter than the checkpointed {}",
            checkpoint.annotations_offset
        )));
    }

    let (state, ann_offset, fail_offset) = recover(run_dir, &positions)?;
    let bits = decode_bitmap(&checkpoint.completed, corpus.len())
        .ok_or_else(|| corrupt("completed bitmap does not decode".into()))?;
    if bits.iter().zip(&state.completed).any(|(c, s)| *c && !*s) {
        return Err(corrupt("checkpoint lists records missing from annotations".into()));
    }
    for f in &checkpoint.failed {
        let known = positions.get(&f.record_id).is_some_and(|p| state.failed[*p].is_some());
        if !known {
            return Err(corrupt(format!("failed record {} missing from failures", f.record_id)));
        }
    }

    let mut manifest = manifest;
    for e in &endpoints {
        if !manifest.endpoints.iter().any(|x| x.id == e.id) {
            manifest.endpoints.push(EndpointInfo {
                id: e.id.clone(),
                url: e.url.clone(),
            });
        }
    }
    let sessions = checkpoint.sessions + 1;
    let session = Session {
        run_dir: run_dir.to_path_buf(),
        manifest,
        corpus,
        endpoints,
        config,
        control,
        elapsed_before: checkpoint.elapsed_seconds,
        sessions,
    };
    session.execute(state, ann_offset, fail_offset)
}

fn load_checkpoint(run_dir: &Path) -> Result<RunCheckpoint, OrchestratorError> {
    let path = run_dir.join(CHECKPOINT_FILE);
    if !path.exists() {
        return Err(OrchestratorError::MissingCheckpoint(path));
    }
    read_json::<RunCheckpoint>(&path).map_err(|e| {
        let previous = read_json::<RunCheckpoint>(&run_dir.join(PREVIOUS_CHECKPOINT_FILE)).ok();
        OrchestratorError::CorruptCheckpoint {
            path: path.clone(),
            last_valid_offset: previous.map(|c| c.annotations_offset),
            reason: e.to_string(),
        }
    })
}

enum Outcome {
    Annotated(EmotionAnnotation),
    Failed(FailureRecord),
}

struct Session<'a> {
    run_dir: PathBuf,
    manifest: RunManifest,
    corpus: Vec<NewsRecord>,
    endpoints: Vec<Endpoint>,
    config: &'a RunConfig,
    control: &'a RunControl,
    elapsed_before: f64,
    sessions: u32,
}

struct Shared<'a> {
    pool: Mutex<EndpointPool>,
    recovery: Mutex<()>,
    recovery_rounds: AtomicU32,
    endpoints: &'a [Endpoint],
    config: &'a RunConfig,
    control: &'a RunControl,
    fatal: Mutex<Option<OrchestratorError>>,
}

impl Shared<'_> {
    fn abort(&self, e: OrchestratorError) {
        self.fatal.lock().unwrap().get_or_insert(e);
        self.control.request_stop();
    }

    /// Next usable endpoint, waiting out an all-down pool with exponential
    /// backoff. `Ok(None)` when the run is stopping.
    fn acquire(&self, tried: &[usize]) -> Result<Option<usize>, OrchestratorError> {
        loop {
            if let Some(i) = self.pool.lock().unwrap().next_endpoint_avoiding(tried) {
                return Ok(Some(i));
            }
            let _guard = self.recovery.lock().unwrap();
            if !self.pool.lock().unwrap().all_down() {
                continue;
            }
            let round = self.recovery_rounds.load(Ordering::SeqCst);
            if round >= self.config.max_recovery_rounds {
                return Err(OrchestratorError::AllEndpointsDown { rounds: round });
            }
            let delay = self
                .config
                .backoff_base
                .saturating_mul(1u32.checked_shl(round).unwrap_or(u32::MAX))
                .min(self.config.backoff_cap);
            tracing::warn!(round, ?delay, "all endpoints down, backing off");
            let until = Instant::now() + delay;
            while Instant::now() < until {
                if self.control.stopping() {
                    return Ok(None);
                }
                thread::sleep((until - Instant::now()).min(Duration::from_millis(50)));
            }
            self.recovery_rounds.fetch_add(1, Ordering::SeqCst);
            self.pool.lock().unwrap().readmit_down();
        }
    }

    fn call(&self, i: usize, request: &InferenceRequest) -> (Result<String, TransportError>, f64) {
        let start = Instant::now();
        let r = self.endpoints[i].backend.generate(request);
        (r, start.elapsed().as_secs_f64() * 1000.0)
    }

    fn succeed(&self, i: usize) {
        self.pool.lock().unwrap().record_success(i);
        self.recovery_rounds.store(0, Ordering::SeqCst);
    }

    fn classify(&self, record: &NewsRecord) -> Result<Option<Outcome>, OrchestratorError> {
        let fail = |reason, detail: String, attempts, endpoint: Option<usize>| {
            Outcome::Failed(FailureRecord {
                record_id: record.record_id.clone(),
                reason,
                detail,
                attempts,
                endpoint_id: endpoint.map(|i| self.endpoints[i].id.clone()),
            })
        };
        let text = match &record.body {
            Some(b) => format!("{}\n{b}", record.headline),
            None => record.headline.clone(),
        };
        if let Some(detail) = invalid_input(&text) {
            return Ok(Some(fail(FailureReason::InvalidInput, detail, 0, None)));
        }
        let request = InferenceRequest {
            record_id: record.record_id.clone(),
            model: self.config.model_id.clone(),
            prompt: build_prompt(record, self.config.max_body_chars),
            temperature: self.config.temperature,
            max_tokens: self.config.max_tokens,
        };
        let accept = |i: usize, v: crate::annotation::ValidatedOutput, latency| {
            self.succeed(i);
            Outcome::Annotated(v.into_annotation(
                &record.record_id,
                &self.endpoints[i].id,
                latency,
                &self.config.model_id,
            ))
        };

        let mut tried: Vec<usize> = Vec::new();
        let mut last: Option<TransportError> = None;
        while tried.len() < self.config.max_item_retries.max(1) as usize {
            let Some(i) = self.acquire(&tried)? else {
                return Ok(None);
            };
            tried.push(i);
            let (response, latency) = self.call(i, &request);
            let first: ValidationError = match response {
                Err(e) => {
                    self.pool.lock().unwrap().record_failure(i);
                    last = Some(e);
                    continue;
                }
                Ok(text) => match parse_and_validate(&text) {
                    Ok(v) => return Ok(Some(accept(i, v, latency))),
                    Err(e) => e,
                },
            };
            // the endpoint answered, so it is reachable; ask it once more
            self.succeed(i);
            let (response, latency) = self.call(i, &request);
            match response {
                Err(e) => {
                    self.pool.lock().unwrap().record_failure(i);
                    last = Some(e);
                }
                Ok(text) => {
                    return Ok(Some(match parse_and_validate(&text) {
                        Ok(v) => accept(i, v, latency),
                        Err(second) => fail(
                            FailureReason::from_validation_kind(second.kind()),
                            format!("{first}; retry: {second}"),
                            tried.len() as u32 + 1,
                            Some(i),
                        ),
                    }))
                }
            }
        }
        let detail = last.map(|e| e.to_string()).unwrap_or_default();
        Ok(Some(fail(
            FailureReason::ExhaustedRetries,
            detail,
            tried.len() as u32,
            tried.last().copied(),
        )))
    }
}

/// Appends outcomes and keeps the in-memory state in step with the files.
struct Writer<'s, 'a> {
    session: &'s Session<'a>,
    state: RecoveredState,
    annotations: BufWriter<File>,
    failures: BufWriter<File>,
    ann_offset: u64,
    fail_offset: u64,
    written: u64,
    since_checkpoint: u64,
    started: Instant,
}

impl Writer<'_, '_> {
    fn append(&mut self, pos: usize, outcome: Outcome) -> Result<(), OrchestratorError> {
        if self.state.is_done(pos) {
            return Ok(());
        }
        let ann_path = self.session.run_dir.join(ANNOTATIONS_FILE);
        let fail_path = self.session.run_dir.join(FAILURES_FILE);
        match outcome {
            Outcome::Annotated(a) => {
                let mut line = serde_json::to_vec(&a).expect("annotation serializes");
                line.push(b'\n');
                self.annotations.write_all(&line).map_err(io_err(&ann_path))?;
                self.ann_offset += line.len() as u64;
                self.state.completed[pos] = true;
                *self.state.per_endpoint_counts.entry(a.endpoint_id).or_default() += 1;
                self.state.latency_sum_ms += a.latency_ms;
            }
            Outcome::Failed(f) => {
                let mut line = serde_json::to_vec(&f).expect("failure serializes");
                line.push(b'\n');
                self.failures.write_all(&line).map_err(io_err(&fail_path))?;
                self.fail_offset += line.len() as u64;
                self.state.failed[pos] = Some(f.reason);
            }
        }
        self.written += 1;
        self.since_checkpoint += 1;
        if self.since_checkpoint >= self.session.config.checkpoint_every.max(1) {
            self.checkpoint()?;
        }
        Ok(())
    }

    fn checkpoint(&mut self) -> Result<(), OrchestratorError> {
        let ann_path = self.session.run_dir.join(ANNOTATIONS_FILE);
        let fail_path = self.session.run_dir.join(FAILURES_FILE);
        self.annotations.flush().map_err(io_err(&ann_path))?;
        self.annotations.get_ref().sync_data().map_err(io_err(&ann_path))?;
        self.failures.flush().map_err(io_err(&fail_path))?;
        self.failures.get_ref().sync_data().map_err(io_err(&fail_path))?;
        self.session.write_checkpoint(
            &self.state,
            self.ann_offset,
            self.fail_offset,
            self.started.elapsed().as_secs_f64(),
        )?;
        self.since_checkpoint = 0;
        Ok(())
    }

    fn progress(&self) -> Progress {
        Progress {
            written: self.written,
            succeeded: self.state.succeeded(),
            failed: self.state.failed_count(),
        }
    }

    /// Drop buffered bytes the way a killed process would, leaving at most
    /// half of them (typically a torn line) on disk.
    fn crash(self) {
        for w in [self.annotations, self.failures] {
            let (mut file, buffered) = w.into_parts();
            if let Ok(buf) = buffered {
                let _ = file.write_all(&buf[..buf.len() / 2]);
            }
        }
    }
}

fn open_append(path: &Path) -> Result<BufWriter<File>, OrchestratorError> {
    let f = OpenOptions::new().append(true).create(true).open(path).map_err(io_err(path))?;
    Ok(BufWriter::with_capacity(64 * 1024, f))
}

impl<'a> Session<'a> {
    fn write_checkpoint(
        &self,
        state: &RecoveredState,
        ann_offset: u64,
        fail_offset: u64,
        session_elapsed: f64,
    ) -> Result<(), OrchestratorError> {
        let failed = state
            .failed
            .iter()
            .enumerate()
            .filter_map(|(p, r)| {
                r.map(|reason| FailedEntry {
                    record_id: self.corpus[p].record_id.clone(),
                    reason,
                })
            })
            .collect();
        let checkpoint = RunCheckpoint {
            run_id: self.manifest.run_id.clone(),
            corpus_len: self.corpus.len() as u64,
            high_water_mark: state.high_water_mark(),
            completed: encode_bitmap(&state.completed),
            completed_count: state.succeeded(),
            per_endpoint_counts: state.per_endpoint_counts.clone(),
            failed,
            annotations_offset: ann_offset,
            failures_offset: fail_offset,
            latency_sum_ms: state.latency_sum_ms,
            elapsed_seconds: self.elapsed_before + session_elapsed,
            sessions: self.sessions,
        };
        let path = self.run_dir.join(CHECKPOINT_FILE);
        if path.exists() {
            let prev = self.run_dir.join(PREVIOUS_CHECKPOINT_FILE);
            fs::copy(&path, &prev).map_err(io_err(&prev))?;
        }
        write_json_atomic(&path, &checkpoint)
    }

    fn report(&self, state: &RecoveredState, wall_clock_seconds: f64) -> RunReport {
        let succeeded = state.succeeded();
        let failed = state.failed_count();
        let mut per_endpoint_counts: BTreeMap<String, u64> =
            self.manifest.endpoints.iter().map(|e| (e.id.clone(), 0)).collect();
        for (id, n) in &state.per_endpoint_counts {
            *per_endpoint_counts.entry(id.clone()).or_default() += n;
        }
        let processed = succeeded + failed;
        RunReport {
            run_id: self.manifest.run_id.clone(),
            total_items: processed,
            succeeded,
            failed,
            mean_latency_ms: (succeeded > 0).then(|| state.latency_sum_ms / succeeded as f64),
            throughput_items_per_min: if wall_clock_seconds > 0.0 {
                processed as f64 * 60.0 / wall_clock_seconds
            } else {
                0.0
            },
            per_endpoint_counts,
            wall_clock_seconds,
            sessions: self.sessions,
        }
    }

    fn execute(
        mut self,
        state: RecoveredState,
        ann_offset: u64,
        fail_offset: u64,
    ) -> Result<RunOutcome, OrchestratorError> {
        let todo: Vec<usize> = (0..self.corpus.len()).filter(|p| !state.is_done(*p)).collect();
        let started = Instant::now();
        let ids: Vec<(&str, &str)> = self
            .endpoints
            .iter()
            .map(|e| (e.id.as_str(), e.url.as_str()))
            .collect();
        let shared = Shared {
            pool: Mutex::new(EndpointPool::new(ids, self.config.max_consecutive_failures)),
            recovery: Mutex::new(()),
            recovery_rounds: AtomicU32::new(0),
            endpoints: &self.endpoints,
            config: self.config,
            control: self.control,
            fatal: Mutex::new(None),
        };
        let mut writer = Writer {
            session: &self,
            state,
            annotations: open_append(&self.run_dir.join(ANNOTATIONS_FILE))?,
            failures: open_append(&self.run_dir.join(FAILURES_FILE))?,
            ann_offset,
            fail_offset,
            written: 0,
            since_checkpoint: 0,
            started,
        };

        let next = AtomicUsize::new(0);
        let workers = self.config.workers.max(1).min(todo.len().max(1));
        let (tx, rx) = mpsc::sync_channel::<(usize, Outcome)>(workers * 4);
        let corpus = &self.corpus;
        let mut crashed = false;
        let write_result: Result<(), OrchestratorError> = thread::scope(|scope| {
            for _ in 0..workers {
                let tx = tx.clone();
                let (shared, next, todo) = (&shared, &next, &todo);
                scope.spawn(move || {
                    while !shared.control.stopping() {
                        let k = next.fetch_add(1, Ordering::SeqCst);
                        let Some(&pos) = todo.get(k) else { break };
                        match shared.classify(&corpus[pos]) {
                            Ok(Some(outcome)) => {
                                if tx.send((pos, outcome)).is_err() {
                                    break;
                                }
                            }
                            Ok(None) => break,
                            Err(e) => {
                                shared.abort(e);
                                break;
                            }
                        }
                    }
                });
            }
            drop(tx);
            for (pos, outcome) in rx {
                if self.control.crashed() {
                    crashed = true;
                    return Ok(());
                }
                if let Err(e) = writer.append(pos, outcome) {
                    shared.abort(e);
                    return Ok(());
                }
                if let Some(observe) = &self.control.observer {
                    observe(&writer.progress(), self.control);
                }
            }
            crashed = self.control.crashed();
            Ok(())
        });
        write_result?;
        if crashed {
            writer.crash();
            return Err(OrchestratorError::Crashed);
        }

        let fatal = shared.fatal.into_inner().unwrap();
        writer.checkpoint()?;
        let Writer { state, .. } = writer;
        let wall = self.elapsed_before + started.elapsed().as_secs_f64();
        let report = self.report(&state, wall);
        if let Some(e) = fatal {
            return Err(e);
        }
        let complete = (0..self.corpus.len()).all(|p| state.is_done(p));
        if complete {
            write_json_atomic(&self.run_dir.join(REPORT_FILE), &report)?;
            self.manifest.status = RunStatus::Complete;
            self.manifest.counts = RunCounts {
                succeeded: report.succeeded,
                failed: report.failed,
            };
        }
        write_json_atomic(&self.run_dir.join(MANIFEST_FILE), &self.manifest)?;
        Ok(RunOutcome {
            run_dir: self.run_dir.clone(),
            report,
            complete,
        })
    }
}
