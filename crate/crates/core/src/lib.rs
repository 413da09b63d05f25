//! Emotion-aware news analytics.
//!
//! The pipeline runs in stages, each backed by a module:
//!
//! - [`ingest`]: decode JSONL/CSV news dumps, clean headline text, drop short,
//!   off-language and duplicate records.
//! - [`taxonomy`]: the 28 fine emotion labels, seven coarse classes, the
//!   negative set and valence/arousal anchors.
//! - [`orchestrator`]: classify every record through a pool of JSON-speaking
//!   inference endpoints with round-robin failover and resumable runs.
//! - [`metrics`]: distributions, negativity, affect, trends, divergence,
//!   polarization and cross-outlet story matching.
//! - [`store`]: read-side index over corpora, runs and metric artifacts.

pub mod annotation;
pub mod exec;
pub mod ingest;
pub mod metrics;
pub mod orchestrator;
pub mod store;
pub mod synthetic;
pub mod taxonomy;
pub mod text;

pub use exec::Exec;
pub use ingest::{CleaningReport, IngestConfig, NewsRecord};
pub use taxonomy::{AffectScores, CoarseClass, EmotionLabel, NegativeSet, Taxonomy};
