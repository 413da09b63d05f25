use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::affect::mean_affect;
use super::distribution::{distribution_of, negativity_ratio, EmotionDistribution, Level};
use crate::annotation::EmotionAnnotation;
use crate::exec::Exec;
use crate::ingest::NewsRecord;
use crate::taxonomy::{AffectScores, NegativeSet, Taxonomy};

/// Per-outlet aggregate. `mean_affect` and `negativity_ratio` are `None`
/// for an outlet that has corpus records but no annotations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutletEmotionProfile {
    pub outlet: String,
    pub distribution: EmotionDistribution,
    pub mean_affect: Option<AffectScores>,
    pub negativity_ratio: Option<f64>,
    pub item_count: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProfilesOutcome {
    /// Sorted by outlet name.
    pub profiles: Vec<OutletEmotionProfile>,
    /// Annotations whose record_id has no corpus record.
    pub orphan_annotations: u64,
}

pub fn outlet_profiles(
    corpus: &[NewsRecord],
    annotations: &[EmotionAnnotation],
    taxonomy: &Taxonomy,
    negatives: &NegativeSet,
    exec: Exec,
) -> ProfilesOutcome {
    let outlet_of: HashMap<&str, &str> = corpus
        .iter()
        .map(|r| (r.record_id.as_str(), r.outlet.as_str()))
        .collect();
    let mut by_outlet: BTreeMap<&str, Vec<EmotionAnnotation>> =
        corpus.iter().map(|r| (r.outlet.as_str(), Vec::new())).collect();
    let mut orphan_annotations = 0;
    for ann in annotations {
        match outlet_of.get(ann.record_id.as_str()) {
            Some(outlet) => by_outlet.entry(outlet).or_default().push(ann.clone()),
            None => orphan_annotations += 1,
        }
    }
    if orphan_annotations > 0 {
        tracing::warn!(orphan_annotations, "annotations without a corpus record were excluded");
    }

    let groups: Vec<(&str, Vec<EmotionAnnotation>)> = by_outlet.into_iter().collect();
    let profiles = exec.map(&groups, |(outlet, anns)| {
        let fine = distribution_of(anns, Level::Fine, taxonomy, Exec::Sequential);
        OutletEmotionProfile {
            outlet: outlet.to_string(),
            distribution: fine.to_coarse(taxonomy),
            mean_affect: mean_affect(anns, taxonomy),
            negativity_ratio: negativity_ratio(&fine, negatives).ok(),
            item_count: anns.len() as u64,
        }
    });
    ProfilesOutcome {
        profiles,
        orphan_annotations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::Probabilities;
    use crate::taxonomy::EmotionLabel;

    fn ann(record: &NewsRecord, label: EmotionLabel) -> EmotionAnnotation {
        EmotionAnnotation {
            record_id: record.record_id.clone(),
            dominant: label,
            probabilities: Probabilities::one_hot(label),
            confidence: 1.0,
            endpoint_id: "e".into(),
            latency_ms: 0.0,
            model_id: "m".into(),
        }
    }

    #[test]
    fn single_outlet_and_orphans() {
        let corpus: Vec<_> = (0..4)
            .map(|i| NewsRecord::new("A", None, None, &format!("headline {i}"), None))
            .collect();
        let mut anns: Vec<_> = corpus.iter().map(|r| ann(r, EmotionLabel::Anger)).collect();
        let stray = NewsRecord::new("Z", None, None, "not in corpus", None);
        anns.push(ann(&stray, EmotionLabel::Joy));

        let out = outlet_profiles(&corpus, &anns, &Taxonomy::default(), &NegativeSet::default(), Exec::Sequential);
        assert_eq!(out.orphan_annotations, 1);
        assert_eq!(out.profiles.len(), 1);
        let p = &out.profiles[0];
        assert_eq!(p.item_count, 4);
        assert_eq!(p.distribution.total, 4);
        assert_eq!(p.distribution.level, Level::Coarse);
        assert_eq!(p.negativity_ratio, Some(1.0));
    }

    #[test]
    fn outlet_without_annotations_is_undefined() {
        let corpus = [NewsRecord::new("A", None, None, "x y z", None)];
        let out = outlet_profiles(&corpus, &[], &Taxonomy::default(), &NegativeSet::default(), Exec::Sequential);
        let p = &out.profiles[0];
        assert_eq!(p.item_count, 0);
        assert!(p.mean_affect.is_none());
        assert!(p.negativity_ratio.is_none());
        assert!(p.distribution.shares.is_none());
    }
}
