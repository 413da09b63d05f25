//! Corpus- and outlet-level affective statistics.
//!
//! Every function here is pure over its inputs. Aggregates that have no
//! defined value (an empty group, a distribution with zero items) come back
//! as `None`/`null` rather than zero so they never read as "neutral".

mod affect;
mod artifacts;
mod distribution;
mod divergence;
mod matching;
mod profiles;
mod trends;

use thiserror::Error;

pub use affect::{affect_of, mean_affect, mean_valence_by_emotion};
pub use artifacts::{
    compute_metrics, read_artifact, write_artifacts, Artifact, DistributionArtifact,
    MatchesArtifact, MetricsArtifacts, MetricsConfig, ProfilesArtifact, SchemaError,
    DISTRIBUTION_FILE, MATCHES_FILE, POLARIZATION_FILE, PROFILES_FILE, TRENDS_FILE,
};
pub use distribution::{
    distribution, distribution_of, negativity_ratio, EmotionDistribution, Level,
};
pub use divergence::{api_index, jsd, pairwise_jsd, polarization, PolarizationReport};
pub use matching::{match_stories, MatchConfig, MatchOutcome, MatchedStoryGroup, TimeSpan};
pub use profiles::{outlet_profiles, OutletEmotionProfile, ProfilesOutcome};
pub use trends::{
    daily_buckets, index_series, rolling_by_days, rolling_mean, DailyBucket, IndexPoint,
    IndexSeries, TrendPoint, TrendsArtifact, DEFAULT_INDEX_WINDOW, DEFAULT_WINDOW_DAYS,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("undefined: {0}")]
    Undefined(&'static str),
}
