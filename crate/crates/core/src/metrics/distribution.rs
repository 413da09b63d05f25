use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::annotation::EmotionAnnotation;
use crate::exec::Exec;
use crate::taxonomy::{CoarseClass, EmotionLabel, NegativeSet, Taxonomy, LABEL_COUNT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Fine,
    Coarse,
}

impl Level {
    pub fn names(self) -> Vec<&'static str> {
        match self {
            Level::Fine => EmotionLabel::ALL.iter().map(|l| l.as_str()).collect(),
            Level::Coarse => CoarseClass::ALL.iter().map(|c| c.as_str()).collect(),
        }
    }
}

/// Counts of dominant labels at one level, in canonical label order.
///
/// `shares` is `None` when `total` is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmotionDistribution {
    pub level: Level,
    pub counts: IndexMap<String, u64>,
    pub total: u64,
    pub shares: Option<IndexMap<String, f64>>,
}

impl EmotionDistribution {
    pub fn from_counts(level: Level, counts: &[u64]) -> Self {
        let names = level.names();
        assert_eq!(names.len(), counts.len(), "count vector length");
        let total: u64 = counts.iter().sum();
        let shares = (total > 0).then(|| {
            names
                .iter()
                .zip(counts)
                .map(|(n, c)| (n.to_string(), *c as f64 / total as f64))
                .collect()
        });
        Self {
            level,
            counts: names
                .iter()
                .zip(counts)
                .map(|(n, c)| (n.to_string(), *c))
                .collect(),
            total,
            shares,
        }
    }

    pub fn count_of(&self, name: &str) -> u64 {
        self.counts.get(name).copied().unwrap_or(0)
    }

    pub fn share_of(&self, name: &str) -> Option<f64> {
        self.shares.as_ref().map(|s| s.get(name).copied().unwrap_or(0.0))
    }

    /// Shares as a dense vector in canonical order.
    pub fn share_vector(&self) -> Option<Vec<f64>> {
        let shares = self.shares.as_ref()?;
        Some(
            self.level
                .names()
                .iter()
                .map(|n| shares.get(*n).copied().unwrap_or(0.0))
                .collect(),
        )
    }

    pub fn count_vector(&self) -> Vec<u64> {
        self.level.names().iter().map(|n| self.count_of(n)).collect()
    }

    /// Most frequent class; ties go to canonical order. `None` when empty.
    pub fn dominant(&self) -> Option<&str> {
        if self.total == 0 {
            return None;
        }
        let mut best: Option<(&'static str, u64)> = None;
        for name in self.level.names() {
            let count = self.count_of(name);
            if best.is_none_or(|(_, c)| count > c) {
                best = Some((name, count));
            }
        }
        best.map(|(n, _)| n)
    }

    /// Push a fine distribution through the coarse mapping.
    pub fn to_coarse(&self, taxonomy: &Taxonomy) -> Self {
        match self.level {
            Level::Coarse => self.clone(),
            Level::Fine => {
                let mut coarse = [0u64; CoarseClass::ALL.len()];
                for label in EmotionLabel::ALL {
                    coarse[taxonomy.coarse_of(label).index()] += self.count_of(label.as_str());
                }
                Self::from_counts(Level::Coarse, &coarse)
            }
        }
    }
}

/// Tally dominant labels.
pub fn distribution(
    labels: &[EmotionLabel],
    level: Level,
    taxonomy: &Taxonomy,
    exec: Exec,
) -> EmotionDistribution {
    let fine = exec.fold(
        labels,
        || [0u64; LABEL_COUNT],
        |mut acc, l| {
            acc[l.index()] += 1;
            acc
        },
        |mut a, b| {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
            a
        },
    );
    let dist = EmotionDistribution::from_counts(Level::Fine, &fine);
    match level {
        Level::Fine => dist,
        Level::Coarse => dist.to_coarse(taxonomy),
    }
}

pub fn distribution_of(
    annotations: &[EmotionAnnotation],
    level: Level,
    taxonomy: &Taxonomy,
    exec: Exec,
) -> EmotionDistribution {
    let labels: Vec<EmotionLabel> = annotations.iter().map(|a| a.dominant).collect();
    distribution(&labels, level, taxonomy, exec)
}

/// Combined share of the negative labels in a fine-level distribution.
pub fn negativity_ratio(
    dist: &EmotionDistribution,
    negatives: &NegativeSet,
) -> Result<f64, MetricsError> {
    if dist.level != Level::Fine {
        return Err(MetricsError::InvalidArgument(
            "negativity ratio needs a fine-level distribution".into(),
        ));
    }
    if dist.total == 0 {
        return Err(MetricsError::Undefined("negativity ratio of an empty distribution"));
    }
    let negative: u64 = negatives.labels().map(|l| dist.count_of(l.as_str())).sum();
    Ok(negative as f64 / dist.total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use EmotionLabel as L;

    #[test]
    fn single_item() {
        let t = Taxonomy::default();
        let d = distribution(&[L::Joy], Level::Fine, &t, Exec::Sequential);
        assert_eq!(d.total, 1);
        assert_eq!(d.share_of("joy"), Some(1.0));
        assert_eq!(d.share_of("anger"), Some(0.0));
        assert_eq!(d.counts.len(), 28);
        assert_eq!(d.dominant(), Some("joy"));
    }

    #[test]
    fn empty_input_has_undefined_shares() {
        let t = Taxonomy::default();
        let d = distribution(&[], Level::Coarse, &t, Exec::Parallel);
        assert_eq!(d.total, 0);
        assert!(d.shares.is_none());
        assert_eq!(d.dominant(), None);
        let fine = distribution(&[], Level::Fine, &t, Exec::Parallel);
        assert!(matches!(
            negativity_ratio(&fine, &NegativeSet::default()),
            Err(MetricsError::Undefined(_))
        ));
    }

    #[test]
    fn negativity_edge_cases() {
        let t = Taxonomy::default();
        let neutral = distribution(&[L::Neutral; 5], Level::Fine, &t, Exec::Sequential);
        assert_eq!(negativity_ratio(&neutral, &NegativeSet::default()).unwrap(), 0.0);
        let all = NegativeSet::from_labels(EmotionLabel::ALL).unwrap();
        let mixed = distribution(&[L::Joy, L::Fear, L::Neutral], Level::Fine, &t, Exec::Sequential);
        assert_eq!(negativity_ratio(&mixed, &all).unwrap(), 1.0);
        let coarse = mixed.to_coarse(&t);
        assert!(negativity_ratio(&coarse, &all).is_err());
    }

    #[test]
    fn coarse_level_counts() {
        let t = Taxonomy::default();
        let labels = [L::Grief, L::Sadness, L::Nervousness, L::Joy, L::Pride];
        let d = distribution(&labels, Level::Coarse, &t, Exec::Sequential);
        assert_eq!(d.count_of("sadness"), 2);
        assert_eq!(d.count_of("fear"), 1);
        assert_eq!(d.count_of("joy"), 2);
        assert_eq!(d.counts.len(), 7);
        // tie between joy and sadness goes to joy (declared first)
        assert_eq!(d.dominant(), Some("joy"));
    }
}
