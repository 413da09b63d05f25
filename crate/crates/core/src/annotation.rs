//! The per-record classification result and the validator that turns raw
//! model output into one.

use std::fmt;

use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;
use thiserror::Error;

use crate::taxonomy::{EmotionLabel, LABEL_COUNT};

/// Accepted window for the raw probability mass before renormalization.
pub const MASS_WINDOW: (f64, f64) = (0.85, 1.15);

/// Tolerance used when re-checking persisted annotations.
pub const PERSISTED_MASS_EPS: f64 = 0.01;

/// A probability for each of the 28 labels, indexed by label order.
///
/// Serialized as a JSON object holding only the non-zero entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probabilities([f64; LABEL_COUNT]);

impl Default for Probabilities {
    fn default() -> Self {
        Self([0.0; LABEL_COUNT])
    }
}

impl Probabilities {
    pub fn from_array(values: [f64; LABEL_COUNT]) -> Self {
        Self(values)
    }

    pub fn one_hot(label: EmotionLabel) -> Self {
        let mut p = Self::default();
        p.0[label.index()] = 1.0;
        p
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (EmotionLabel, f64)>) -> Self {
        let mut p = Self::default();
        for (label, value) in pairs {
            p.0[label.index()] = value;
        }
        p
    }

    pub fn get(&self, label: EmotionLabel) -> f64 {
        self.0[label.index()]
    }

    pub fn as_array(&self) -> &[f64; LABEL_COUNT] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = (EmotionLabel, f64)> + '_ {
        EmotionLabel::ALL.into_iter().map(|l| (l, self.0[l.index()]))
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    /// Highest-probability label; ties go to the label declared first.
    pub fn argmax(&self) -> EmotionLabel {
        let mut best = 0;
        for i in 1..LABEL_COUNT {
            if self.0[i] > self.0[best] {
                best = i;
            }
        }
        EmotionLabel::ALL[best]
    }

    fn normalized(mut self) -> Self {
        let total = self.sum();
        for v in &mut self.0 {
            *v /= total;
        }
        self
    }

    /// Labels with non-zero probability, descending, ties in label order.
    pub fn ranked(&self) -> Vec<(EmotionLabel, f64)> {
        let mut ranked: Vec<_> = self.iter().filter(|(_, p)| *p > 0.0).collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        ranked
    }
}

impl Serialize for Probabilities {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let nonzero: Vec<_> = self.iter().filter(|(_, p)| *p != 0.0).collect();
        let mut map = serializer.serialize_map(Some(nonzero.len()))?;
        for (label, p) in nonzero {
            map.serialize_entry(label.as_str(), &p)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for Probabilities {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct ProbVisitor;

        impl<'de> Visitor<'de> for ProbVisitor {
            type Value = Probabilities;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a map from emotion label to probability")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<Self::Value, A::Error> {
                let mut p = Probabilities::default();
                while let Some((label, value)) = access.next_entry::<EmotionLabel, f64>()? {
                    p.0[label.index()] = value;
                }
                Ok(p)
            }
        }

        deserializer.deserialize_map(ProbVisitor)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmotionAnnotation {
    pub record_id: String,
    pub dominant: EmotionLabel,
    pub probabilities: Probabilities,
    pub confidence: f64,
    pub endpoint_id: String,
    pub latency_ms: f64,
    pub model_id: String,
}

impl EmotionAnnotation {
    /// Re-check the persisted-annotation invariants.
    pub fn lint(&self) -> Result<(), String> {
        let p = &self.probabilities;
        if p.iter().any(|(_, v)| !(0.0..=1.0).contains(&v)) {
            return Err(format!("{}: probability outside [0,1]", self.record_id));
        }
        let mass = p.sum();
        if (mass - 1.0).abs() > PERSISTED_MASS_EPS {
            return Err(format!("{}: probability mass {mass}", self.record_id));
        }
        if p.argmax() != self.dominant {
            return Err(format!(
                "{}: dominant {} is not the argmax {}",
                self.record_id,
                self.dominant,
                p.argmax()
            ));
        }
        if !(0.0..=1.0).contains(&self.confidence) {
            return Err(format!("{}: confidence {}", self.record_id, self.confidence));
        }
        if !(self.latency_ms >= 0.0) {
            return Err(format!("{}: latency {}", self.record_id, self.latency_ms));
        }
        Ok(())
    }
}

/// Model output after validation, before provenance is attached.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedOutput {
    pub dominant: EmotionLabel,
    pub probabilities: Probabilities,
    pub confidence: f64,
}

impl ValidatedOutput {
    pub fn into_annotation(
        self,
        record_id: impl Into<String>,
        endpoint_id: impl Into<String>,
        latency_ms: f64,
        model_id: impl Into<String>,
    ) -> EmotionAnnotation {
        EmotionAnnotation {
            record_id: record_id.into(),
            dominant: self.dominant,
            probabilities: self.probabilities,
            confidence: self.confidence,
            endpoint_id: endpoint_id.into(),
            latency_ms,
            model_id: model_id.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("malformed JSON: {fragment}")]
    MalformedJson { fragment: String },
    #[error("unknown label: {fragment}")]
    UnknownLabel { fragment: String },
    #[error("bad probability mass: {fragment}")]
    BadProbabilityMass { fragment: String },
    #[error("missing field: {fragment}")]
    MissingField { fragment: String },
}

impl ValidationError {
    pub fn kind(&self) -> &'static str {
        match self {
            ValidationError::MalformedJson { .. } => "malformed_json",
            ValidationError::UnknownLabel { .. } => "unknown_label",
            ValidationError::BadProbabilityMass { .. } => "bad_probability_mass",
            ValidationError::MissingField { .. } => "missing_field",
        }
    }
}

fn fragment(text: &str) -> String {
    const MAX: usize = 200;
    match text.char_indices().nth(MAX) {
        Some((cut, _)) => format!("{}…", &text[..cut]),
        None => text.to_string(),
    }
}

/// Models sometimes wrap JSON in a markdown fence.
fn strip_fence(text: &str) -> &str {
    let t = text.trim();
    let Some(rest) = t.strip_prefix("```") else {
        return t;
    };
    let rest = rest.strip_prefix("json").unwrap_or(rest);
    rest.strip_suffix("```").unwrap_or(rest).trim()
}

/// Parse and validate a model response.
///
/// Unknown labels are rejected, raw mass must fall inside [`MASS_WINDOW`] and
/// is then renormalized, the dominant label is recomputed as the argmax, and
/// confidence is clamped into `[0, 1]`.
pub fn parse_and_validate(response_text: &str) -> Result<ValidatedOutput, ValidationError> {
    let body = strip_fence(response_text);
    let value: Value = serde_json::from_str(body).map_err(|_| ValidationError::MalformedJson {
        fragment: fragment(body),
    })?;
    let obj = value.as_object().ok_or_else(|| ValidationError::MalformedJson {
        fragment: fragment(body),
    })?;

    let field = |name: &str| {
        obj.get(name).ok_or_else(|| ValidationError::MissingField {
            fragment: name.to_string(),
        })
    };

    let claimed = field("dominant_emotion")?;
    let claimed = claimed.as_str().ok_or_else(|| ValidationError::MalformedJson {
        fragment: fragment(&claimed.to_string()),
    })?;
    claimed
        .parse::<EmotionLabel>()
        .map_err(|_| ValidationError::UnknownLabel {
            fragment: claimed.to_string(),
        })?;

    let raw_probs = field("probabilities")?;
    let raw_probs = raw_probs
        .as_object()
        .ok_or_else(|| ValidationError::MalformedJson {
            fragment: fragment(&raw_probs.to_string()),
        })?;
    let mut probs = [0.0; LABEL_COUNT];
    for (name, v) in raw_probs {
        let label = name
            .parse::<EmotionLabel>()
            .map_err(|_| ValidationError::UnknownLabel {
                fragment: name.clone(),
            })?;
        let p = v.as_f64().ok_or_else(|| ValidationError::MalformedJson {
            fragment: format!("{name}: {v}"),
        })?;
        if !(0.0..=1.0).contains(&p) {
            return Err(ValidationError::BadProbabilityMass {
                fragment: format!("{name}: {v}"),
            });
        }
        probs[label.index()] += p;
    }
    let probabilities = Probabilities(probs);
    let mass = probabilities.sum();
    if !(MASS_WINDOW.0..=MASS_WINDOW.1).contains(&mass) {
        return Err(ValidationError::BadProbabilityMass {
            fragment: format!("sum = {mass}"),
        });
    }
    let probabilities = probabilities.normalized();

    let confidence = field("confidence")?;
    let confidence = confidence
        .as_f64()
        .ok_or_else(|| ValidationError::MalformedJson {
            fragment: format!("confidence: {confidence}"),
        })?
        .clamp(0.0, 1.0);

    Ok(ValidatedOutput {
        dominant: probabilities.argmax(),
        probabilities,
        confidence,
    })
}
