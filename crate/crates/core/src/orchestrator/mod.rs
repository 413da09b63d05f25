//! Batch classification over a pool of model endpoints.
//!
//! Workers pull records from a shared queue and send each to the next
//! endpoint in round-robin order, failing over when an endpoint errors. A
//! single writer appends results to the run directory and checkpoints
//! progress, so an interrupted run can be resumed without sending any
//! finished record again.

mod mock;
mod pool;
mod prompt;
mod run;
mod rundir;
mod transport;

use std::path::PathBuf;

use thiserror::Error;

use crate::ingest::IngestError;

pub use mock::{mock_label, mock_output, mock_respond, MockEndpoint, MockFault, MALFORMED_OUTPUT};
pub use pool::{EndpointPool, EndpointStatus, Health};
pub use prompt::{build_prompt, headline_of, InferenceRequest, DEFAULT_MAX_BODY_CHARS};
pub use run::{invalid_input, resume, run_batch, Progress, RunConfig, RunControl, RunOutcome};
pub use rundir::{
    decode_bitmap, encode_bitmap, read_annotations, read_failures, read_manifest, read_report,
    scan_jsonl, EndpointInfo, FailedEntry, FailureReason, FailureRecord, JsonlScan, RunCheckpoint,
    RunCounts, RunManifest, RunReport, RunSettings, RunStatus, ANNOTATIONS_FILE, CHECKPOINT_FILE,
    FAILURES_FILE, MANIFEST_FILE, PREVIOUS_CHECKPOINT_FILE, REPORT_FILE,
};
pub use transport::{
    extract_text, parse_endpoints, Backend, Endpoint, EndpointParseError, HttpBackend,
    TransportConfig, TransportError, DEFAULT_ROUTE, DEFAULT_TIMEOUT,
};

#[derive(Debug, Error)]
pub enum OrchestratorError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    Json { path: PathBuf, message: String },
    #[error(transparent)]
    Corpus(#[from] IngestError),
    #[error("corpus changed since the run started (expected sha256 {expected}, found {found})")]
    CorpusChanged { expected: String, found: String },
    #[error("corpus contains record {0} twice")]
    DuplicateRecordId(String),
    #[error("no endpoints configured")]
    NoEndpoints,
    #[error("no checkpoint at {}", .0.display())]
    MissingCheckpoint(PathBuf),
    #[error("corrupt checkpoint {}: {reason} (last valid annotations offset: {last_valid_offset:?})", path.display())]
    CorruptCheckpoint {
        path: PathBuf,
        last_valid_offset: Option<u64>,
        reason: String,
    },
    #[error("{} is corrupt at byte {offset}: {reason}", file.display())]
    CorruptRun {
        file: PathBuf,
        offset: u64,
        reason: String,
    },
    #[error("all endpoints down after {rounds} recovery rounds")]
    AllEndpointsDown { rounds: u32 },
    #[error("run abandoned by a simulated crash")]
    Crashed,
}
