//! Fine-grained emotion labels, their coarse grouping, the negative set and
//! the valence/arousal anchor table.
//!
//! The canonical table lives in `data/taxonomy.json` and is embedded at build
//! time. Alternative tables can be loaded with [`Taxonomy::from_json`]; they
//! are validated against the same invariants as the shipped one.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The canonical taxonomy file, byte-for-byte as committed.
pub const CANONICAL_TAXONOMY_JSON: &str = include_str!("../data/taxonomy.json");

macro_rules! labels {
    ($($variant:ident => $name:literal),+ $(,)?) => {
        /// One of the 28 fine-grained emotion labels.
        ///
        /// Declaration order is the fixed precedence used to break argmax ties.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum EmotionLabel {
            $($variant),+
        }

        impl EmotionLabel {
            pub const ALL: [EmotionLabel; 28] = [$(EmotionLabel::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(EmotionLabel::$variant => $name),+
                }
            }
        }
    };
}

labels! {
    Admiration => "admiration",
    Amusement => "amusement",
    Anger => "anger",
    Annoyance => "annoyance",
    Approval => "approval",
    Caring => "caring",
    Confusion => "confusion",
    Curiosity => "curiosity",
    Desire => "desire",
    Disappointment => "disappointment",
    Disapproval => "disapproval",
    Disgust => "disgust",
    Embarrassment => "embarrassment",
    Excitement => "excitement",
    Fear => "fear",
    Gratitude => "gratitude",
    Grief => "grief",
    Joy => "joy",
    Love => "love",
    Nervousness => "nervousness",
    Optimism => "optimism",
    Pride => "pride",
    Realization => "realization",
    Relief => "relief",
    Remorse => "remorse",
    Sadness => "sadness",
    Surprise => "surprise",
    Neutral => "neutral",
}

pub const LABEL_COUNT: usize = EmotionLabel::ALL.len();

impl EmotionLabel {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }
}

impl fmt::Display for EmotionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown emotion label `{0}`")]
pub struct UnknownLabel(pub String);

impl FromStr for EmotionLabel {
    type Err = UnknownLabel;

    /// Case-insensitive; surrounding whitespace is ignored.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let needle = s.trim();
        Self::ALL
            .iter()
            .copied()
            .find(|l| l.as_str().eq_ignore_ascii_case(needle))
            .ok_or_else(|| UnknownLabel(s.to_string()))
    }
}

impl Serialize for EmotionLabel {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for EmotionLabel {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One of the seven coarse emotion classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoarseClass {
    Joy,
    Sadness,
    Anger,
    Fear,
    Surprise,
    Disgust,
    Neutral,
}

pub const COARSE_COUNT: usize = CoarseClass::ALL.len();

impl CoarseClass {
    pub const ALL: [CoarseClass; 7] = [
        CoarseClass::Joy,
        CoarseClass::Sadness,
        CoarseClass::Anger,
        CoarseClass::Fear,
        CoarseClass::Surprise,
        CoarseClass::Disgust,
        CoarseClass::Neutral,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CoarseClass::Joy => "joy",
            CoarseClass::Sadness => "sadness",
            CoarseClass::Anger => "anger",
            CoarseClass::Fear => "fear",
            CoarseClass::Surprise => "surprise",
            CoarseClass::Disgust => "disgust",
            CoarseClass::Neutral => "neutral",
        }
    }
}

impl fmt::Display for CoarseClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CoarseClass {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let needle = s.trim();
        Self::ALL
            .iter()
            .copied()
            .find(|c| c.as_str().eq_ignore_ascii_case(needle))
            .ok_or_else(|| UnknownLabel(s.to_string()))
    }
}

/// Valence in `[-1, 1]`, arousal in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffectScores {
    pub valence: f64,
    pub arousal: f64,
}

impl AffectScores {
    pub const fn new(valence: f64, arousal: f64) -> Self {
        Self { valence, arousal }
    }

    pub fn clamped(self) -> Self {
        Self {
            valence: self.valence.clamp(-1.0, 1.0),
            arousal: self.arousal.clamp(0.0, 1.0),
        }
    }

    pub fn in_range(&self) -> bool {
        (-1.0..=1.0).contains(&self.valence) && (0.0..=1.0).contains(&self.arousal)
    }
}

#[derive(Debug, Error)]
pub enum TaxonomyError {
    #[error("taxonomy is not valid JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("label `{0}` appears more than once")]
    DuplicateLabel(EmotionLabel),
    #[error("label `{0}` is missing from the table")]
    MissingLabel(EmotionLabel),
    #[error("coarse class `{0}` has no fine labels")]
    EmptyCoarseClass(CoarseClass),
    #[error("anchor for `{label}` out of range: valence {valence}, arousal {arousal}")]
    AnchorOutOfRange {
        label: EmotionLabel,
        valence: f64,
        arousal: f64,
    },
    #[error("anchor sign violation for `{label}`: {reason}")]
    SignViolation {
        label: EmotionLabel,
        reason: &'static str,
    },
    #[error("negative set is empty")]
    EmptyNegativeSet,
}

/// One row of `taxonomy.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaxonomyRow {
    pub label: EmotionLabel,
    pub coarse: CoarseClass,
    pub valence: f64,
    pub arousal: f64,
    pub negative: bool,
}

/// Immutable after construction; share freely across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct Taxonomy {
    coarse: [CoarseClass; LABEL_COUNT],
    anchors: [AffectScores; LABEL_COUNT],
    negative: [bool; LABEL_COUNT],
}

impl Default for Taxonomy {
    fn default() -> Self {
        Self::from_json(CANONICAL_TAXONOMY_JSON).expect("canonical taxonomy is valid")
    }
}

impl Taxonomy {
    pub fn from_json(text: &str) -> Result<Self, TaxonomyError> {
        let rows: Vec<TaxonomyRow> = serde_json::from_str(text)?;
        Self::from_rows(&rows)
    }

    pub fn from_rows(rows: &[TaxonomyRow]) -> Result<Self, TaxonomyError> {
        let mut seen: [Option<&TaxonomyRow>; LABEL_COUNT] = [None; LABEL_COUNT];
        for row in rows {
            let slot = &mut seen[row.label.index()];
            if slot.is_some() {
                return Err(TaxonomyError::DuplicateLabel(row.label));
            }
            *slot = Some(row);
        }

        let mut coarse = [CoarseClass::Neutral; LABEL_COUNT];
        let mut anchors = [AffectScores::new(0.0, 0.0); LABEL_COUNT];
        let mut negative = [false; LABEL_COUNT];
        for label in EmotionLabel::ALL {
            let row = seen[label.index()].ok_or(TaxonomyError::MissingLabel(label))?;
            let anchor = AffectScores::new(row.valence, row.arousal);
            if !anchor.in_range() {
                return Err(TaxonomyError::AnchorOutOfRange {
                    label,
                    valence: row.valence,
                    arousal: row.arousal,
                });
            }
            coarse[label.index()] = row.coarse;
            anchors[label.index()] = anchor;
            negative[label.index()] = row.negative;
        }

        let taxonomy = Self {
            coarse,
            anchors,
            negative,
        };
        taxonomy.check_invariants()?;
        Ok(taxonomy)
    }

    fn check_invariants(&self) -> Result<(), TaxonomyError> {
        for class in CoarseClass::ALL {
            if !self.coarse.contains(&class) {
                return Err(TaxonomyError::EmptyCoarseClass(class));
            }
        }
        if !self.negative.iter().any(|&n| n) {
            return Err(TaxonomyError::EmptyNegativeSet);
        }
        for label in EmotionLabel::ALL {
            let v = self.anchor_of(label).valence;
            if self.is_negative(label) && v >= 0.0 {
                return Err(TaxonomyError::SignViolation {
                    label,
                    reason: "negative-set labels need valence < 0",
                });
            }
            if self.coarse_of(label) == CoarseClass::Joy && v <= 0.0 {
                return Err(TaxonomyError::SignViolation {
                    label,
                    reason: "joy-class labels need valence > 0",
                });
            }
            if label == EmotionLabel::Neutral && v != 0.0 {
                return Err(TaxonomyError::SignViolation {
                    label,
                    reason: "neutral needs valence = 0",
                });
            }
        }
        Ok(())
    }

    pub fn coarse_of(&self, label: EmotionLabel) -> CoarseClass {
        self.coarse[label.index()]
    }

    pub fn anchor_of(&self, label: EmotionLabel) -> AffectScores {
        self.anchors[label.index()]
    }

    pub fn is_negative(&self, label: EmotionLabel) -> bool {
        self.negative[label.index()]
    }

    pub fn negative_set(&self) -> NegativeSet {
        NegativeSet::from_labels(EmotionLabel::ALL.into_iter().filter(|l| self.is_negative(*l)))
            .expect("validated non-empty")
    }

    pub fn fine_labels_of(&self, class: CoarseClass) -> impl Iterator<Item = EmotionLabel> + '_ {
        EmotionLabel::ALL
            .into_iter()
            .filter(move |l| self.coarse_of(*l) == class)
    }

    pub fn rows(&self) -> Vec<TaxonomyRow> {
        EmotionLabel::ALL
            .into_iter()
            .map(|label| {
                let a = self.anchor_of(label);
                TaxonomyRow {
                    label,
                    coarse: self.coarse_of(label),
                    valence: a.valence,
                    arousal: a.arousal,
                    negative: self.is_negative(label),
                }
            })
            .collect()
    }
}

/// A non-empty set of fine labels counted as negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NegativeSet {
    members: [bool; LABEL_COUNT],
}

impl NegativeSet {
    pub fn from_labels(labels: impl IntoIterator<Item = EmotionLabel>) -> Option<Self> {
        let mut members = [false; LABEL_COUNT];
        for l in labels {
            members[l.index()] = true;
        }
        members.iter().any(|&m| m).then_some(Self { members })
    }

    pub fn contains(&self, label: EmotionLabel) -> bool {
        self.members[label.index()]
    }

    pub fn labels(&self) -> impl Iterator<Item = EmotionLabel> + '_ {
        EmotionLabel::ALL.into_iter().filter(|l| self.contains(*l))
    }
}

impl Default for NegativeSet {
    fn default() -> Self {
        Self::from_labels([
            EmotionLabel::Anger,
            EmotionLabel::Sadness,
            EmotionLabel::Disappointment,
            EmotionLabel::Fear,
        ])
        .expect("non-empty")
    }
}
