//! Headline text cleaning, script detection and tokenization.

use std::sync::LazyLock;

use regex::Regex;
use unicode_general_category::{get_general_category, GeneralCategory};
use unicode_normalization::UnicodeNormalization;

static MARKUP: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"<!--[\s\S]*?-->|</?[A-Za-z!][^<>]*>").unwrap());

static ENTITY: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"&(?:#[0-9]{1,7}|#[xX][0-9A-Fa-f]{1,6}|[A-Za-z][A-Za-z0-9]{1,31});").unwrap()
});

static PICTOGRAPHIC: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\p{Extended_Pictographic}").unwrap());

const BENGALI_BLOCK: std::ops::RangeInclusive<char> = '\u{0980}'..='\u{09FF}';

/// Emoji plumbing that is not itself pictographic: skin-tone modifiers,
/// regional indicators, variation selectors, ZWJ, tag characters, keycap.
fn is_emoji_component(c: char) -> bool {
    matches!(c,
        '\u{1F3FB}'..='\u{1F3FF}'
        | '\u{1F1E6}'..='\u{1F1FF}'
        | '\u{FE00}'..='\u{FE0F}'
        | '\u{E0100}'..='\u{E01EF}'
        | '\u{200D}'
        | '\u{E0020}'..='\u{E007F}'
        | '\u{20E3}')
}

/// Invisible separators that should behave like a space.
fn is_invisible_space(c: char) -> bool {
    matches!(c, '\u{200B}' | '\u{2060}' | '\u{FEFF}')
}

fn clean_pass(input: &str) -> String {
    let stripped = MARKUP.replace_all(input, " ");
    let stripped = ENTITY.replace_all(&stripped, " ");
    let stripped = PICTOGRAPHIC.replace_all(&stripped, "");

    let filtered: String = stripped
        .chars()
        .filter_map(|c| {
            if is_emoji_component(c) {
                None
            } else if is_invisible_space(c) {
                Some(' ')
            } else if c.is_control() && !c.is_whitespace() {
                None
            } else {
                Some(c)
            }
        })
        .collect();

    let composed: String = filtered.nfc().collect();
    composed.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Clean raw headline or body text.
///
/// Strips markup and HTML entities, removes emoji, applies NFC, collapses
/// whitespace and trims. Punctuation, digits and case are kept. The rule
/// list is iterated to a fixpoint so the function is idempotent even when
/// one removal exposes another (`<<b>b>`).
pub fn normalize_text(raw: &str) -> String {
    let mut current = clean_pass(raw);
    // every non-final pass strictly changes the string; this bound is never hit in practice
    for _ in 0..16 {
        let next = clean_pass(&current);
        if next == current {
            break;
        }
        current = next;
    }
    current
}

pub fn is_letter(c: char) -> bool {
    matches!(
        get_general_category(c),
        GeneralCategory::UppercaseLetter
            | GeneralCategory::LowercaseLetter
            | GeneralCategory::TitlecaseLetter
            | GeneralCategory::ModifierLetter
            | GeneralCategory::OtherLetter
    )
}

fn is_mark(c: char) -> bool {
    matches!(
        get_general_category(c),
        GeneralCategory::NonspacingMark
            | GeneralCategory::SpacingMark
            | GeneralCategory::EnclosingMark
    )
}

/// Share of letter codepoints that belong to the Bengali block.
///
/// Returns 0 for text without letters (including the empty string).
pub fn language_ratio(text: &str) -> f64 {
    let (bengali, letters) = text.chars().filter(|c| is_letter(*c)).fold(
        (0usize, 0usize),
        |(b, l), c| (b + usize::from(BENGALI_BLOCK.contains(&c)), l + 1),
    );
    if letters == 0 {
        0.0
    } else {
        bengali as f64 / letters as f64
    }
}

/// Lowercased word tokens: maximal runs of letters, digits, combining marks
/// and ZWNJ (which Bengali uses inside words).
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for c in text.chars() {
        if c.is_alphanumeric() || is_mark(c) || c == '\u{200C}' {
            current.extend(c.to_lowercase());
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

pub fn codepoint_len(text: &str) -> usize {
    text.chars().count()
}
