//! The five JSON files the `metrics` command writes and the API serves.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use chrono::Duration;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::affect::{mean_affect, mean_valence_by_emotion};
use super::distribution::{distribution_of, negativity_ratio, EmotionDistribution, Level};
use super::divergence::{polarization, PolarizationReport};
use super::matching::{match_stories, MatchConfig, MatchedStoryGroup};
use super::profiles::{outlet_profiles, OutletEmotionProfile};
use super::trends::{daily_buckets, index_series, rolling_by_days, TrendsArtifact};
use super::MetricsError;
use crate::annotation::EmotionAnnotation;
use crate::exec::Exec;
use crate::ingest::NewsRecord;
use crate::taxonomy::{AffectScores, EmotionLabel, NegativeSet, Taxonomy};

pub const DISTRIBUTION_FILE: &str = "distribution.json";
pub const PROFILES_FILE: &str = "profiles.json";
pub const POLARIZATION_FILE: &str = "polarization.json";
pub const TRENDS_FILE: &str = "trends.json";
pub const MATCHES_FILE: &str = "matches.json";

const SHARE_SUM_TOLERANCE: f64 = 1e-9;
const SYMMETRY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum SchemaError {
    #[error("{file}: {source}")]
    Io {
        file: String,
        #[source]
        source: io::Error,
    },
    #[error("{file}: not valid JSON for this artifact: {message}")]
    Parse { file: String, message: String },
    #[error("{file}: field `{field}`: {message}")]
    Field {
        file: String,
        field: String,
        message: String,
    },
}

impl SchemaError {
    pub fn field(&self) -> Option<&str> {
        match self {
            SchemaError::Field { field, .. } => Some(field),
            _ => None,
        }
    }
}

/// A metrics file with semantic checks beyond what deserialization enforces.
pub trait Artifact: Serialize + DeserializeOwned {
    const FILE: &'static str;

    /// Returns the first violated constraint as `(field path, message)`.
    fn check(&self) -> Result<(), (String, String)>;

    fn validate(&self) -> Result<(), SchemaError> {
        self.check().map_err(|(field, message)| SchemaError::Field {
            file: Self::FILE.to_string(),
            field,
            message,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionArtifact {
    pub fine: EmotionDistribution,
    pub coarse: EmotionDistribution,
    pub negative_set: Vec<EmotionLabel>,
    pub negativity_ratio: Option<f64>,
    pub mean_affect: Option<AffectScores>,
    pub mean_valence_by_emotion: BTreeMap<EmotionLabel, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfilesArtifact {
    pub profiles: Vec<OutletEmotionProfile>,
    pub orphan_annotations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchesArtifact {
    pub window_hours: i64,
    pub similarity_threshold: f64,
    pub undated_records: u64,
    pub groups: Vec<MatchedStoryGroup>,
}

type Check = Result<(), (String, String)>;

fn fail(field: impl Into<String>, message: impl Into<String>) -> Check {
    Err((field.into(), message.into()))
}

fn check_fraction(field: &str, value: f64) -> Check {
    if !(0.0..=1.0).contains(&value) {
        return fail(field, format!("{value} is outside [0, 1]"));
    }
    Ok(())
}

fn check_affect(field: &str, value: &AffectScores) -> Check {
    if !value.in_range() {
        return fail(field, format!("({}, {}) is outside the affect ranges", value.valence, value.arousal));
    }
    Ok(())
}

fn check_distribution(field: &str, d: &EmotionDistribution, level: Level) -> Check {
    if d.level != level {
        return fail(format!("{field}.level"), format!("expected {level:?}"));
    }
    let names = level.names();
    if d.counts.len() != names.len() || names.iter().any(|n| !d.counts.contains_key(*n)) {
        return fail(format!("{field}.counts"), "labels differ from the canonical list");
    }
    let sum: u64 = d.counts.values().sum();
    if sum != d.total {
        return fail(format!("{field}.total"), format!("{} but counts sum to {sum}", d.total));
    }
    match &d.shares {
        None if d.total > 0 => fail(format!("{field}.shares"), "missing for a non-empty distribution"),
        Some(_) if d.total == 0 => fail(format!("{field}.shares"), "present for an empty distribution"),
        None => Ok(()),
        Some(shares) => {
            if shares.len() != names.len() || names.iter().any(|n| !shares.contains_key(*n)) {
                return fail(format!("{field}.shares"), "labels differ from the canonical list");
            }
            for (name, share) in shares {
                check_fraction(&format!("{field}.shares.{name}"), *share)?;
            }
            let mass: f64 = shares.values().sum();
            if (mass - 1.0).abs() > SHARE_SUM_TOLERANCE * names.len() as f64 {
                return fail(format!("{field}.shares"), format!("sum to {mass}"));
            }
            Ok(())
        }
    }
}

impl Artifact for DistributionArtifact {
    const FILE: &'static str = DISTRIBUTION_FILE;

    fn check(&self) -> Check {
        check_distribution("fine", &self.fine, Level::Fine)?;
        check_distribution("coarse", &self.coarse, Level::Coarse)?;
        if self.coarse.total != self.fine.total {
            return fail("coarse.total", "differs from fine.total");
        }
        if let Some(r) = self.negativity_ratio {
            check_fraction("negativity_ratio", r)?;
        }
        if let Some(a) = &self.mean_affect {
            check_affect("mean_affect", a)?;
        }
        for (label, v) in &self.mean_valence_by_emotion {
            if !(-1.0..=1.0).contains(v) {
                return fail(format!("mean_valence_by_emotion.{label}"), format!("{v} is outside [-1, 1]"));
            }
        }
        Ok(())
    }
}

impl Artifact for ProfilesArtifact {
    const FILE: &'static str = PROFILES_FILE;

    fn check(&self) -> Check {
        for (i, p) in self.profiles.iter().enumerate() {
            let f = format!("profiles[{i}]");
            check_distribution(&format!("{f}.distribution"), &p.distribution, Level::Coarse)?;
            if p.distribution.total != p.item_count {
                return fail(format!("{f}.item_count"), "differs from distribution.total");
            }
            if let Some(r) = p.negativity_ratio {
                check_fraction(&format!("{f}.negativity_ratio"), r)?;
            }
            if let Some(a) = &p.mean_affect {
                check_affect(&format!("{f}.mean_affect"), a)?;
            }
        }
        Ok(())
    }
}

impl Artifact for PolarizationReport {
    const FILE: &'static str = POLARIZATION_FILE;

    fn check(&self) -> Check {
        let n = self.outlets.len();
        if self.pairwise_jsd.len() != n || self.pairwise_jsd.iter().any(|r| r.len() != n) {
            return fail("pairwise_jsd", format!("is not a {n}x{n} matrix"));
        }
        for i in 0..n {
            if self.pairwise_jsd[i][i] != 0.0 {
                return fail(format!("pairwise_jsd[{i}][{i}]"), "diagonal must be 0");
            }
            for j in 0..n {
                let v = self.pairwise_jsd[i][j];
                check_fraction(&format!("pairwise_jsd[{i}][{j}]"), v)?;
                if (v - self.pairwise_jsd[j][i]).abs() > SYMMETRY_TOLERANCE {
                    return fail(format!("pairwise_jsd[{i}][{j}]"), "matrix is not symmetric");
                }
            }
        }
        check_fraction("api", self.api)?;
        if let Some(j) = self.jsd {
            check_fraction("jsd", j)?;
        }
        Ok(())
    }
}

impl Artifact for TrendsArtifact {
    const FILE: &'static str = TRENDS_FILE;

    fn check(&self) -> Check {
        if self.window_days < 1 {
            return fail("window_days", "must be at least 1");
        }
        for (i, b) in self.daily.iter().enumerate() {
            if b.count == 0 {
                return fail(format!("daily[{i}].count"), "empty bucket");
            }
            if i > 0 && self.daily[i - 1].date >= b.date {
                return fail(format!("daily[{i}].date"), "dates must be strictly ascending");
            }
            check_affect(&format!("daily[{i}]"), &AffectScores::new(b.mean_valence, b.mean_arousal))?;
        }
        if self.rolling.len() != self.daily.len() {
            return fail("rolling", "must have one point per daily bucket");
        }
        for (i, p) in self.rolling.iter().enumerate() {
            check_affect(&format!("rolling[{i}]"), &AffectScores::new(p.valence, p.arousal))?;
        }
        for (i, p) in self.index_series.points.iter().enumerate() {
            check_affect(&format!("index_series.points[{i}]"), &AffectScores::new(p.valence, p.arousal))?;
        }
        Ok(())
    }
}

impl Artifact for MatchesArtifact {
    const FILE: &'static str = MATCHES_FILE;

    fn check(&self) -> Check {
        let window = Duration::hours(self.window_hours);
        for (i, g) in self.groups.iter().enumerate() {
            if g.record_ids.len() < 2 {
                return fail(format!("groups[{i}].record_ids"), "fewer than 2 members");
            }
            if g.outlets.len() < 2 {
                return fail(format!("groups[{i}].outlets"), "fewer than 2 outlets");
            }
            if g.time_span.end < g.time_span.start || g.time_span.end - g.time_span.start > window {
                return fail(format!("groups[{i}].time_span"), "outside the matching window");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsConfig {
    pub negatives: NegativeSet,
    pub window_days: u32,
    pub index_window: usize,
    pub matching: MatchConfig,
    pub exec: Exec,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            negatives: NegativeSet::default(),
            window_days: super::DEFAULT_WINDOW_DAYS,
            index_window: super::DEFAULT_INDEX_WINDOW,
            matching: MatchConfig::default(),
            exec: Exec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsArtifacts {
    pub distribution: DistributionArtifact,
    pub profiles: ProfilesArtifact,
    pub polarization: PolarizationReport,
    pub trends: TrendsArtifact,
    pub matches: MatchesArtifact,
}

pub fn compute_metrics(
    corpus: &[NewsRecord],
    annotations: &[EmotionAnnotation],
    taxonomy: &Taxonomy,
    config: &MetricsConfig,
) -> Result<MetricsArtifacts, MetricsError> {
    let exec = config.exec;
    let fine = distribution_of(annotations, Level::Fine, taxonomy, exec);
    let distribution = DistributionArtifact {
        coarse: fine.to_coarse(taxonomy),
        negative_set: config.negatives.labels().collect(),
        negativity_ratio: negativity_ratio(&fine, &config.negatives).ok(),
        mean_affect: mean_affect(annotations, taxonomy),
        mean_valence_by_emotion: mean_valence_by_emotion(annotations, taxonomy),
        fine,
    };

    let profiles = outlet_profiles(corpus, annotations, taxonomy, &config.negatives, exec);
    let matching = MatchConfig {
        exec,
        ..config.matching.clone()
    };
    let matched = match_stories(corpus, annotations, &matching);
    let polarization = polarization(&profiles.profiles, matched.groups.len() as u64, exec)?;

    let daily = daily_buckets(corpus, annotations, taxonomy);
    let trends = TrendsArtifact {
        window_days: config.window_days,
        rolling: rolling_by_days(&daily, config.window_days)?,
        index_series: index_series(annotations, taxonomy, config.index_window)?,
        daily,
    };

    Ok(MetricsArtifacts {
        distribution,
        profiles: ProfilesArtifact {
            profiles: profiles.profiles,
            orphan_annotations: profiles.orphan_annotations,
        },
        polarization,
        trends,
        matches: MatchesArtifact {
            window_hours: matching.window_hours,
            similarity_threshold: matching.similarity_threshold,
            undated_records: matched.undated_records as u64,
            groups: matched.groups,
        },
    })
}

fn write_one<A: Artifact>(dir: &Path, artifact: &A) -> Result<(), SchemaError> {
    let io_err = |source| SchemaError::Io {
        file: A::FILE.to_string(),
        source,
    };
    let mut text = serde_json::to_string_pretty(artifact).expect("artifact serializes");
    text.push('\n');
    fs::write(dir.join(A::FILE), text).map_err(io_err)
}

pub fn write_artifacts(dir: &Path, artifacts: &MetricsArtifacts) -> Result<(), SchemaError> {
    fs::create_dir_all(dir).map_err(|source| SchemaError::Io {
        file: dir.display().to_string(),
        source,
    })?;
    write_one(dir, &artifacts.distribution)?;
    write_one(dir, &artifacts.profiles)?;
    write_one(dir, &artifacts.polarization)?;
    write_one(dir, &artifacts.trends)?;
    write_one(dir, &artifacts.matches)
}

/// Load and validate one artifact. `Ok(None)` when the file does not exist.
pub fn read_artifact<A: Artifact>(dir: &Path) -> Result<Option<A>, SchemaError> {
    let path = dir.join(A::FILE);
    let text = match fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
        Err(source) => {
            return Err(SchemaError::Io {
                file: A::FILE.to_string(),
                source,
            })
        }
    };
    let artifact: A = serde_json::from_str(&text).map_err(|e| SchemaError::Parse {
        file: A::FILE.to_string(),
        message: e.to_string(),
    })?;
    artifact.validate()?;
    Ok(Some(artifact))
}
