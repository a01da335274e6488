//! Per-token features for the sequence tagger.
//!
//! Ten text features are computed from the token string and its POS
//! context; three visual features come from the normalized bounding box.
//! Case-sensitive features are computed on the original-case token text,
//! which the pipeline recovers from the OCR side of the alignment (the
//! clean transcripts themselves are lowercased).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hocr::{normalize_bbox, Page, Token};

/// The fixed inventory of text feature names.
pub const TEXT_FEATURES: [&str; 10] = [
    "all_upper",
    "all_lower",
    "all_digit",
    "suffix3",
    "suffix2",
    "pos",
    "pos_suffix2",
    "pos_next2",
    "consec_initcap",
    "initcap_interior",
];

/// The fixed inventory of visual feature names.
pub const VISUAL_FEATURES: [&str; 3] = ["left_margin", "upper_y", "lower_y"];

/// Tagset emitted by the built-in rule tagger (Penn-style subset).
pub const TAGSET: [&str; 8] = ["NN", "NNP", "CD", "IN", "DT", "CC", "TO", "SYM"];

/// Sentinel POS value used past the end of a sequence.
pub const EOS: &str = "EOS";

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("token index {index} out of bounds for sequence of length {len}")]
    IndexOutOfBounds { index: usize, len: usize },
    #[error("POS slice length {pos} does not match sequence length {len}")]
    LengthMismatch { pos: usize, len: usize },
    #[error("token at position {0} is empty")]
    EmptyToken(usize),
    #[error("empty POS tag")]
    EmptyTag,
    #[error(transparent)]
    Hocr(#[from] crate::hocr::HocrError),
}

/// A part-of-speech tag string (non-empty).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PosTag(String);

impl PosTag {
    pub fn new(tag: impl Into<String>) -> Result<PosTag, FeatureError> {
        let tag = tag.into();
        if tag.is_empty() {
            return Err(FeatureError::EmptyTag);
        }
        Ok(PosTag(tag))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

/// Pluggable POS backend. Implementations must return one tag per token.
pub trait PosTagger {
    fn tag(&self, tokens: &[&str]) -> Vec<PosTag>;
}

/// Deterministic lexicon-plus-pattern tagger over [`TAGSET`].
///
/// Closed-class words map directly; digit patterns become `CD`,
/// punctuation-only tokens `SYM`, capitalized tokens `NNP`, everything
/// else `NN`.
#[derive(Debug, Default, Clone)]
pub struct LexiconTagger;

impl LexiconTagger {
    fn tag_one(token: &str) -> &'static str {
        const IN_WORDS: [&str; 27] = [
            "at", "by", "for", "from", "in", "of", "on", "with", "within", "without", "under",
            "upon", "into", "onto", "through", "during", "between", "among", "as", "over",
            "above", "below", "before", "after", "against", "toward", "per",
        ];
        const DT_WORDS: [&str; 13] = [
            "a", "an", "the", "this", "that", "these", "those", "each", "every", "all", "some",
            "any", "no",
        ];
        const CC_WORDS: [&str; 8] = ["and", "but", "or", "nor", "so", "yet", "both", "either"];

        let lower = token.to_lowercase();
        if lower == "to" {
            return "TO";
        }
        if IN_WORDS.contains(&lower.as_str()) {
            return "IN";
        }
        if DT_WORDS.contains(&lower.as_str()) {
            return "DT";
        }
        if CC_WORDS.contains(&lower.as_str()) {
            return "CC";
        }
        let mut has_digit = false;
        if token.chars().all(|c| {
            has_digit |= c.is_ascii_digit();
            c.is_ascii_digit() || c == '.' || c == ','
        }) && has_digit
        {
            return "CD";
        }
        if !token.chars().any(char::is_alphanumeric) {
            return "SYM";
        }
        if token.chars().next().map(char::is_uppercase).unwrap_or(false) {
            return "NNP";
        }
        "NN"
    }
}

impl PosTagger for LexiconTagger {
    fn tag(&self, tokens: &[&str]) -> Vec<PosTag> {
        tokens
            .iter()
            .map(|t| PosTag(LexiconTagger::tag_one(t).to_string()))
            .collect()
    }
}

/// Tags with the default backend. Tokens must be non-empty.
pub fn pos_tag(tokens: &[&str]) -> Result<Vec<PosTag>, FeatureError> {
    if let Some(i) = tokens.iter().position(|t| t.is_empty()) {
        return Err(FeatureError::EmptyToken(i));
    }
    Ok(LexiconTagger.tag(tokens))
}

/// Named feature values for one token. Boolean features carry
/// `"true"`/`"false"`; visual features carry two-decimal ratios.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureMap(BTreeMap<String, String>);

impl FeatureMap {
    pub fn insert(&mut self, name: &str, value: impl Into<String>) {
        self.0.insert(name.to_string(), value.into());
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.0.get(name).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// `name=value` strings, in map (alphabetical) order. These are the
    /// keys of the CRF feature dictionary.
    pub fn feature_strings(&self) -> impl Iterator<Item = String> + '_ {
        self.0.iter().map(|(k, v)| format!("{k}={v}"))
    }

    /// Union of two maps; `other` wins on duplicate names.
    pub fn merged(&self, other: &FeatureMap) -> FeatureMap {
        let mut out = self.clone();
        for (k, v) in &other.0 {
            out.0.insert(k.clone(), v.clone());
        }
        out
    }
}

/// A token as the feature extractor sees it: original-case text plus the
/// index of the text line it sits on.
#[derive(Debug, Clone, Copy)]
pub struct TokenView<'a> {
    pub text: &'a str,
    pub line_index: usize,
}

fn is_upper(s: &str) -> bool {
    let mut cased = false;
    for c in s.chars() {
        if c.is_lowercase() {
            return false;
        }
        cased |= c.is_uppercase();
    }
    cased
}

fn is_lower(s: &str) -> bool {
    let mut cased = false;
    for c in s.chars() {
        if c.is_uppercase() {
            return false;
        }
        cased |= c.is_lowercase();
    }
    cased
}

fn is_digit(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_digit())
}

fn initcap(s: &str) -> bool {
    s.chars().next().map(char::is_uppercase).unwrap_or(false)
}

fn suffix(s: &str, n: usize) -> String {
    let chars: Vec<char> = s.chars().collect();
    let start = chars.len().saturating_sub(n);
    chars[start..].iter().collect()
}

fn bool_str(v: bool) -> &'static str {
    if v {
        "true"
    } else {
        "false"
    }
}

/// Computes the ten text features for token `i` of the sequence.
pub fn text_features(
    seq: &[TokenView],
    i: usize,
    pos: &[PosTag],
) -> Result<FeatureMap, FeatureError> {
    if pos.len() != seq.len() {
        return Err(FeatureError::LengthMismatch { pos: pos.len(), len: seq.len() });
    }
    if i >= seq.len() {
        return Err(FeatureError::IndexOutOfBounds { index: i, len: seq.len() });
    }
    let tok = &seq[i];
    let first_line = seq.iter().map(|t| t.line_index).min().unwrap_or(0);
    let last_line = seq.iter().map(|t| t.line_index).max().unwrap_or(0);

    let tag_at = |k: usize| -> &str {
        if k < pos.len() {
            pos[k].as_str()
        } else {
            EOS
        }
    };

    let mut map = FeatureMap::default();
    map.insert("all_upper", bool_str(is_upper(tok.text)));
    map.insert("all_lower", bool_str(is_lower(tok.text)));
    map.insert("all_digit", bool_str(is_digit(tok.text)));
    map.insert("suffix3", suffix(tok.text, 3));
    map.insert("suffix2", suffix(tok.text, 2));
    map.insert("pos", pos[i].as_str());
    map.insert("pos_suffix2", suffix(pos[i].as_str(), 2));
    map.insert("pos_next2", format!("{}|{}", tag_at(i + 1), tag_at(i + 2)));
    let consec = initcap(tok.text) && i + 1 < seq.len() && initcap(seq[i + 1].text);
    map.insert("consec_initcap", bool_str(consec));
    let interior =
        initcap(tok.text) && tok.line_index != first_line && tok.line_index != last_line;
    map.insert("initcap_interior", bool_str(interior));
    Ok(map)
}

/// Rounds a ratio to two decimals, half away from zero.
pub fn quantize(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

fn ratio_str(v: f64) -> String {
    format!("{:.2}", quantize(v))
}

/// Computes the three visual features for a token.
///
/// `left_margin` is the normalized left edge of the *first* token on the
/// token's line, shared by every token of that line; `upper_y`/`lower_y`
/// are the token's own normalized top and bottom edges.
pub fn visual_features(
    token: &Token,
    page: &Page,
    line_first: &Token,
) -> Result<FeatureMap, FeatureError> {
    let (margin_x, _, _) = normalize_bbox(&line_first.bbox, page)?;
    let (_, y1n, y2n) = normalize_bbox(&token.bbox, page)?;
    let mut map = FeatureMap::default();
    map.insert("left_margin", ratio_str(margin_x));
    map.insert("upper_y", ratio_str(y2n));
    map.insert("lower_y", ratio_str(y1n));
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hocr::BBox;
    use proptest::prelude::*;

    fn tag_strs(tokens: &[&str]) -> Vec<String> {
        pos_tag(tokens)
            .unwrap()
            .into_iter()
            .map(|t| t.as_str().to_string())
            .collect()
    }

    #[test]
    fn tagger_covers_closed_classes_and_patterns() {
        assert_eq!(tag_strs(&["at", "the", "Massachusetts"]), ["IN", "DT", "NNP"]);
        assert_eq!(tag_strs(&["1972"]), ["CD"]);
        assert_eq!(tag_strs(&["to", "and", "word", "...", "3.5"]), ["TO", "CC", "NN", "SYM", "CD"]);
        assert!(pos_tag(&[""]).is_err());
    }

    #[test]
    fn tagger_stays_in_documented_tagset() {
        for word in ["Aa", "zz", "42", "-", "The", "of", "b.s.", "©"] {
            let tags = tag_strs(&[word]);
            assert!(TAGSET.contains(&tags[0].as_str()), "{word} -> {}", tags[0]);
        }
    }

    fn views<'a>(items: &[(&'a str, usize)]) -> Vec<TokenView<'a>> {
        items.iter().map(|&(text, line_index)| TokenView { text, line_index }).collect()
    }

    #[test]
    fn text_features_worked_example() {
        // "Technology 1972" on an interior line, flanked by other lines.
        let seq = views(&[("Thesis", 0), ("Technology", 1), ("1972", 1), ("end", 2)]);
        let pos = pos_tag(&["Thesis", "Technology", "1972", "end"]).unwrap();
        let f = text_features(&seq, 1, &pos).unwrap();
        assert_eq!(f.get("suffix3"), Some("ogy"));
        assert_eq!(f.get("suffix2"), Some("gy"));
        assert_eq!(f.get("all_upper"), Some("false"));
        assert_eq!(f.get("all_lower"), Some("false"));
        assert_eq!(f.get("all_digit"), Some("false"));
        assert_eq!(f.get("pos"), Some("NNP"));
        assert_eq!(f.get("pos_suffix2"), Some("NP"));
        assert_eq!(f.get("pos_next2"), Some("CD|NN"));
        assert_eq!(f.get("initcap_interior"), Some("true"));
        assert_eq!(f.get("consec_initcap"), Some("false"));
    }

    #[test]
    fn eos_sentinel_past_the_end() {
        let seq = views(&[("one", 0), ("two", 0)]);
        let pos = pos_tag(&["one", "two"]).unwrap();
        let last = text_features(&seq, 1, &pos).unwrap();
        assert_eq!(last.get("pos_next2"), Some("EOS|EOS"));
        let second_to_last = text_features(&seq, 0, &pos).unwrap();
        assert_eq!(second_to_last.get("pos_next2"), Some("NN|EOS"));
    }

    #[test]
    fn case_features() {
        let seq = views(&[("THESIS", 0), ("Deep", 1), ("Learning", 1), ("x", 2)]);
        let pos = pos_tag(&["THESIS", "Deep", "Learning", "x"]).unwrap();
        let f = text_features(&seq, 0, &pos).unwrap();
        assert_eq!(f.get("all_upper"), Some("true"));
        assert_eq!(f.get("all_lower"), Some("false"));
        let f = text_features(&seq, 1, &pos).unwrap();
        assert_eq!(f.get("consec_initcap"), Some("true"));
        // "B.S." style: cased chars all upper, punctuation ignored.
        assert!(is_upper("B.S."));
        assert!(!is_upper("1972"));
        assert!(!is_lower("1972"));
    }

    #[test]
    fn full_inventory_always_present() {
        let seq = views(&[("only", 0)]);
        let pos = pos_tag(&["only"]).unwrap();
        let f = text_features(&seq, 0, &pos).unwrap();
        assert_eq!(f.len(), TEXT_FEATURES.len());
        for name in TEXT_FEATURES {
            assert!(f.get(name).is_some(), "missing {name}");
        }
        assert!(text_features(&seq, 1, &pos).is_err());
        assert!(text_features(&seq, 0, &[]).is_err());
    }

    fn token(x1: u32, y1: u32, x2: u32, y2: u32, line: usize, word: usize) -> Token {
        Token {
            text: "w".into(),
            line_index: line,
            word_index: word,
            bbox: BBox { x1, y1, x2, y2 },
            char_start: 0,
            char_end: 1,
        }
    }

    #[test]
    fn visual_features_worked_example() {
        let page = Page { width: 800, height: 1000, tokens: vec![] };
        let tok = token(100, 920, 200, 950, 0, 0);
        let f = visual_features(&tok, &page, &tok).unwrap();
        assert_eq!(f.get("left_margin"), Some("0.13")); // 0.125 rounds half up
        assert_eq!(f.get("upper_y"), Some("0.95"));
        assert_eq!(f.get("lower_y"), Some("0.92"));
        assert_eq!(f.len(), VISUAL_FEATURES.len());
    }

    #[test]
    fn line_sharing_and_boundaries() {
        let page = Page { width: 800, height: 1000, tokens: vec![] };
        let first = token(40, 500, 90, 540, 2, 0);
        let second = token(300, 500, 420, 540, 2, 1);
        let f1 = visual_features(&first, &page, &first).unwrap();
        let f2 = visual_features(&second, &page, &first).unwrap();
        assert_eq!(f1.get("left_margin"), f2.get("left_margin"));

        let bottom_left = token(0, 0, 50, 30, 9, 0);
        let f = visual_features(&bottom_left, &page, &bottom_left).unwrap();
        assert_eq!(f.get("lower_y"), Some("0.00"));

        let zero = Page { width: 0, height: 1000, tokens: vec![] };
        assert!(visual_features(&first, &zero, &first).is_err());
    }

    #[test]
    fn visual_features_scale_invariant() {
        let page = Page { width: 850, height: 1100, tokens: vec![] };
        let tok = token(120, 340, 260, 380, 1, 0);
        let f = visual_features(&tok, &page, &tok).unwrap();
        let k = 4;
        let scaled_page = Page { width: 850 * k, height: 1100 * k, tokens: vec![] };
        let scaled = token(120 * k, 340 * k, 260 * k, 380 * k, 1, 0);
        let g = visual_features(&scaled, &scaled_page, &scaled).unwrap();
        assert_eq!(f, g);
    }

    proptest! {
        /// Text features are position-local: tokens further than two
        /// positions away cannot influence a token's features.
        #[test]
        fn features_are_position_local(
            texts in proptest::collection::vec("[A-Za-z0-9]{1,8}", 5..10),
            replacement in "[A-Za-z0-9]{1,8}",
        ) {
            let n = texts.len();
            let i = 1usize;
            let j = n - 1; // |i - j| > 2 given n >= 5
            let lines: Vec<usize> = (0..n).collect();

            let make = |words: &[String]| -> FeatureMap {
                let refs: Vec<&str> = words.iter().map(String::as_str).collect();
                let seq: Vec<TokenView> = refs
                    .iter()
                    .zip(&lines)
                    .map(|(t, &l)| TokenView { text: t, line_index: l })
                    .collect();
                let pos = pos_tag(&refs).unwrap();
                text_features(&seq, i, &pos).unwrap()
            };

            let base = make(&texts);
            let mut mutated = texts.clone();
            mutated[j] = replacement.clone();
            let changed = make(&mutated);
            prop_assert_eq!(base, changed);
        }
    }
}
