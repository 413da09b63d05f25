use std::collections::BTreeMap;

use crate::annotation::{EmotionAnnotation, Probabilities};
use crate::taxonomy::{AffectScores, EmotionLabel, Taxonomy};

/// Probability-weighted valence and arousal over the anchor table.
pub fn affect_of(probabilities: &Probabilities, taxonomy: &Taxonomy) -> AffectScores {
    let (valence, arousal) = probabilities
        .iter()
        .fold((0.0, 0.0), |(v, a), (label, p)| {
            let anchor = taxonomy.anchor_of(label);
            (v + p * anchor.valence, a + p * anchor.arousal)
        });
    AffectScores::new(valence, arousal).clamped()
}

/// Arithmetic mean of per-item affect; `None` for an empty slice.
pub fn mean_affect<'a>(
    annotations: impl IntoIterator<Item = &'a EmotionAnnotation>,
    taxonomy: &Taxonomy,
) -> Option<AffectScores> {
    let (n, v, a) = annotations.into_iter().fold((0usize, 0.0, 0.0), |(n, v, a), ann| {
        let s = affect_of(&ann.probabilities, taxonomy);
        (n + 1, v + s.valence, a + s.arousal)
    });
    (n > 0).then(|| AffectScores::new(v / n as f64, a / n as f64))
}

/// Mean valence of the items grouped by dominant label. Labels with no
/// items are absent.
pub fn mean_valence_by_emotion(
    annotations: &[EmotionAnnotation],
    taxonomy: &Taxonomy,
) -> BTreeMap<EmotionLabel, f64> {
    let mut sums: BTreeMap<EmotionLabel, (f64, usize)> = BTreeMap::new();
    for ann in annotations {
        let entry = sums.entry(ann.dominant).or_default();
        entry.0 += affect_of(&ann.probabilities, taxonomy).valence;
        entry.1 += 1;
    }
    sums.into_iter()
        .map(|(label, (sum, n))| (label, sum / n as f64))
        .collect()
}
