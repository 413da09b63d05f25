use serde::Serialize;

use crate::ingest::NewsRecord;
use crate::taxonomy::EmotionLabel;

pub const DEFAULT_MAX_BODY_CHARS: usize = 1_000;

/// Prefix of the prompt line that carries the headline.
pub const HEADLINE_PREFIX: &str = "Headline: ";
pub const BODY_PREFIX: &str = "Body: ";

/// Body of one generate call, exactly as sent on the wire.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InferenceRequest {
    #[serde(skip)]
    pub record_id: String,
    pub model: String,
    pub prompt: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

/// Render the classification prompt for one record.
///
/// Whitespace in the headline and body is collapsed so each sits on a
/// single line after its prefix.
pub fn build_prompt(record: &NewsRecord, max_body_chars: usize) -> String {
    let labels: Vec<&str> = EmotionLabel::ALL.iter().map(|l| l.as_str()).collect();
    let mut prompt = String::from(
        "Classify the emotion expressed by this news headline.\n\
         Respond with a single JSON object and nothing else, with exactly these keys:\n\
         \"dominant_emotion\": one label from the allowed list,\n\
         \"probabilities\": an object mapping allowed labels to probabilities that sum to 1,\n\
         \"confidence\": a number between 0 and 1.\n",
    );
    prompt.push_str("Allowed labels: ");
    prompt.push_str(&labels.join(", "));
    prompt.push('\n');
    prompt.push_str(HEADLINE_PREFIX);
    prompt.push_str(&one_line(&record.headline));
    prompt.push('\n');
    if let Some(body) = record.body.as_deref().filter(|b| !b.is_empty()) {
        let truncated: String = body.chars().take(max_body_chars).collect();
        prompt.push_str(BODY_PREFIX);
        prompt.push_str(&one_line(&truncated));
        prompt.push('\n');
    }
    prompt
}

fn one_line(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// The headline line of a prompt built by [`build_prompt`], if present.
pub fn headline_of(prompt: &str) -> Option<&str> {
    prompt.lines().find_map(|l| l.strip_prefix(HEADLINE_PREFIX))
}
