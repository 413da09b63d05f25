//! Deterministic offline stand-in for a model endpoint.

use std::str::FromStr;
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicU8, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use unicode_normalization::UnicodeNormalization;

use super::prompt::{headline_of, InferenceRequest};
use super::transport::{Backend, TransportError};
use crate::taxonomy::EmotionLabel;
use crate::text::tokenize;

use EmotionLabel as L;

/// Keyword prefixes per rule, checked in table order; the first rule with a
/// token starting with one of its keywords wins.
const RULES: &[(EmotionLabel, &[&str], [(EmotionLabel, f64); 2])] = &[
    (
        L::Anger,
        &["আগুন", "হামলা", "সংঘর্ষ", "fire", "attack"],
        [(L::Disapproval, 0.2), (L::Fear, 0.1)],
    ),
    (
        L::Joy,
        &["জয়", "উৎসব", "সাফল্য", "victory", "win"],
        [(L::Excitement, 0.2), (L::Optimism, 0.1)],
    ),
    (
        L::Sadness,
        &["মৃত্যু", "শোক", "death"],
        [(L::Grief, 0.2), (L::Disappointment, 0.1)],
    ),
    (
        L::Fear,
        &["আতঙ্ক", "ভয়", "panic"],
        [(L::Nervousness, 0.2), (L::Sadness, 0.1)],
    ),
    (
        L::Disappointment,
        &["ব্যর্থ"],
        [(L::Sadness, 0.2), (L::Annoyance, 0.1)],
    ),
];

/// Dominant label the rule table assigns to a headline.
pub fn mock_label(headline: &str) -> EmotionLabel {
    let normalized: String = headline.nfc().collect();
    let tokens = tokenize(&normalized);
    RULES
        .iter()
        .find(|(_, keywords, _)| {
            keywords.iter().any(|k| {
                let k: String = k.nfc().collect();
                tokens.iter().any(|t| t.starts_with(&k))
            })
        })
        .map(|(label, _, _)| *label)
        .unwrap_or(L::Neutral)
}

/// Classifier output for a headline, as the model would return it.
pub fn mock_output(headline: &str) -> String {
    let label = mock_label(headline);
    let pairs: Vec<(EmotionLabel, f64)> = match RULES.iter().find(|(l, _, _)| *l == label) {
        Some((_, _, [a, b])) => vec![(label, 0.7), *a, *b],
        None => vec![(L::Neutral, 0.8), (L::Curiosity, 0.1), (L::Approval, 0.1)],
    };
    let probabilities: serde_json::Map<String, serde_json::Value> = pairs
        .iter()
        .map(|(l, p)| (l.as_str().to_string(), serde_json::json!(p)))
        .collect();
    serde_json::json!({
        "dominant_emotion": label.as_str(),
        "probabilities": probabilities,
        "confidence": pairs[0].1,
    })
    .to_string()
}

/// Output for a full prompt: classifies the `Headline:` line, or the whole
/// prompt when there is none.
pub fn mock_respond(prompt: &str) -> String {
    mock_output(headline_of(prompt).unwrap_or(prompt))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MockFault {
    None,
    /// Fail every call with a timeout.
    Timeout,
    /// Answer with truncated JSON.
    Malformed,
    /// Drop the connection.
    Drop,
}

impl FromStr for MockFault {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(MockFault::None),
            "timeout" => Ok(MockFault::Timeout),
            "malformed" => Ok(MockFault::Malformed),
            "drop" => Ok(MockFault::Drop),
            other => Err(format!("unknown fault mode `{other}`")),
        }
    }
}

impl MockFault {
    fn to_u8(self) -> u8 {
        self as u8
    }

    fn from_u8(v: u8) -> Self {
        match v {
            1 => MockFault::Timeout,
            2 => MockFault::Malformed,
            3 => MockFault::Drop,
            _ => MockFault::None,
        }
    }
}

pub const MALFORMED_OUTPUT: &str = r#"{"dominant_emotion": "anger", "probabilities": {"anger": 0.7"#;

/// In-process mock endpoint with latency, fault injection and a kill switch.
///
/// With `serial` set, calls are handled one at a time, like a server backed
/// by a single accelerator.
pub struct MockEndpoint {
    name: String,
    latency: Duration,
    fault: AtomicU8,
    killed: AtomicBool,
    serial: Option<Mutex<()>>,
    calls: AtomicU64,
}

impl MockEndpoint {
    pub fn new(name: impl Into<String>, latency: Duration) -> Self {
        Self {
            name: name.into(),
            latency,
            fault: AtomicU8::new(MockFault::None.to_u8()),
            killed: AtomicBool::new(false),
            serial: None,
            calls: AtomicU64::new(0),
        }
    }

    pub fn serialized(mut self) -> Self {
        self.serial = Some(Mutex::new(()));
        self
    }

    pub fn with_fault(self, fault: MockFault) -> Self {
        self.set_fault(fault);
        self
    }

    /// Parse `name?latency_ms=N&fault=MODE&serial=true` (query optional).
    pub fn from_spec(spec: &str) -> Result<Self, String> {
        let (name, query) = spec.split_once('?').unwrap_or((spec, ""));
        let name = name.trim_end_matches('/');
        if name.is_empty() {
            return Err("mock endpoint needs a name".into());
        }
        let mut mock = MockEndpoint::new(name, Duration::ZERO);
        for pair in query.split('&').filter(|p| !p.is_empty()) {
            let (key, value) = pair.split_once('=').unwrap_or((pair, ""));
            match key {
                "latency_ms" => {
                    let ms: f64 = value.parse().map_err(|_| format!("bad latency_ms `{value}`"))?;
                    if !(ms >= 0.0 && ms.is_finite()) {
                        return Err(format!("bad latency_ms `{value}`"));
                    }
                    mock.latency = Duration::from_secs_f64(ms / 1000.0);
                }
                "fault" => mock.set_fault(value.parse()?),
                "serial" => match value {
                    "" | "1" | "true" => mock = mock.serialized(),
                    "0" | "false" => {}
                    _ => return Err(format!("bad serial `{value}`")),
                },
                other => return Err(format!("unknown mock option `{other}`")),
            }
        }
        Ok(mock)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn set_fault(&self, fault: MockFault) {
        self.fault.store(fault.to_u8(), Ordering::SeqCst);
    }

    /// Refuse all further calls until [`revive`](Self::revive).
    pub fn kill(&self) {
        self.killed.store(true, Ordering::SeqCst);
    }

    pub fn revive(&self) {
        self.killed.store(false, Ordering::SeqCst);
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }
}

impl Backend for MockEndpoint {
    fn generate(&self, request: &InferenceRequest) -> Result<String, TransportError> {
        if self.killed.load(Ordering::SeqCst) {
            return Err(TransportError::Connection(format!("{} refused the connection", self.name)));
        }
        let _guard = self.serial.as_ref().map(|m| m.lock().unwrap_or_else(|e| e.into_inner()));
        self.calls.fetch_add(1, Ordering::SeqCst);
        if !self.latency.is_zero() {
            thread::sleep(self.latency);
        }
        match MockFault::from_u8(self.fault.load(Ordering::SeqCst)) {
            MockFault::None => Ok(mock_respond(&request.prompt)),
            MockFault::Timeout => Err(TransportError::Timeout),
            MockFault::Malformed => Ok(MALFORMED_OUTPUT.to_string()),
            MockFault::Drop => Err(TransportError::Connection("connection reset".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::parse_and_validate;

    #[test]
    fn keyword_rules() {
        assert_eq!(mock_label("ঢাকায় আগুনে পুড়ল বস্তি"), L::Anger);
        assert_eq!(mock_label("বিশ্বকাপে বাংলাদেশের জয়"), L::Joy);
        assert_eq!(mock_label("Panic at the market"), L::Fear);
        assert_eq!(mock_label("সংসদ অধিবেশন আজ"), L::Neutral);
    }

    #[test]
    fn outputs_validate() {
        for h in ["ঢাকায় আগুন", "সংসদ অধিবেশন আজ", "শোক দিবস"] {
            let v = parse_and_validate(&mock_output(h)).unwrap();
            assert_eq!(v.dominant, mock_label(h));
            assert!((v.probabilities.sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn malformed_mode_fails_validation() {
        let m = MockEndpoint::from_spec("m?fault=malformed").unwrap();
        let req = InferenceRequest {
            record_id: "r".into(),
            model: "x".into(),
            prompt: "Headline: আগুন\n".into(),
            temperature: 0.0,
            max_tokens: 8,
        };
        let text = m.generate(&req).unwrap();
        assert_eq!(parse_and_validate(&text).unwrap_err().kind(), "malformed_json");
        m.kill();
        assert!(m.generate(&req).is_err());
    }

    #[test]
    fn spec_parsing() {
        assert!(MockEndpoint::from_spec("a?latency_ms=1.5&serial=1").is_ok());
        assert!(MockEndpoint::from_spec("a?bogus=1").is_err());
        assert!(MockEndpoint::from_spec("?latency_ms=1").is_err());
        assert!(MockEndpoint::from_spec("a?fault=explode").is_err());
    }
}
