//! BIO label codec: annotations to token labels and back.
//!
//! Encoding marks the first token overlapping an annotation `B-<field>`
//! and the rest `I-<field>`; everything else is `O`. Decoding glues
//! contiguous `B`/`I` runs back into field strings.

use thiserror::Error;

use crate::corpus::{Annotation, FieldKind, MetadataRecord};
use crate::hocr::Token;

#[derive(Debug, Error)]
pub enum BioError {
    #[error("annotations overlap: {0} and {1}")]
    Overlap(FieldKind, FieldKind),
    #[error("labels length {labels} does not match token count {tokens}")]
    LengthMismatch { labels: usize, tokens: usize },
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
}

/// The outside label.
pub const OUTSIDE: &str = "O";

pub fn begin_label(field: FieldKind) -> String {
    format!("B-{field}")
}

pub fn inside_label(field: FieldKind) -> String {
    format!("I-{field}")
}

/// A parsed BIO label over the seven metadata fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParsedLabel {
    Outside,
    Begin(FieldKind),
    Inside(FieldKind),
}

pub fn parse_label(label: &str) -> Result<ParsedLabel, BioError> {
    if label == OUTSIDE {
        return Ok(ParsedLabel::Outside);
    }
    let parsed = label
        .strip_prefix("B-")
        .map(|f| (true, f))
        .or_else(|| label.strip_prefix("I-").map(|f| (false, f)))
        .and_then(|(begin, name)| FieldKind::parse(name).map(|f| (begin, f)));
    match parsed {
        Some((true, f)) => Ok(ParsedLabel::Begin(f)),
        Some((false, f)) => Ok(ParsedLabel::Inside(f)),
        None => Err(BioError::UnknownLabel(label.to_string())),
    }
}

/// Encodes character-offset annotations as per-token BIO labels.
///
/// A token belongs to an annotation when their character ranges overlap,
/// so an annotation boundary that splits a token still claims it. When two
/// annotations overlap the same token, the earlier annotation wins it.
pub fn encode(tokens: &[Token], annotations: &[Annotation]) -> Result<Vec<String>, BioError> {
    let mut sorted: Vec<&Annotation> = annotations.iter().collect();
    sorted.sort_by_key(|a| (a.start, a.end));
    for pair in sorted.windows(2) {
        if pair[1].start < pair[0].end {
            return Err(BioError::Overlap(pair[0].field, pair[1].field));
        }
    }

    let mut labels = vec![OUTSIDE.to_string(); tokens.len()];
    for ann in sorted {
        let mut first = true;
        for (i, tok) in tokens.iter().enumerate() {
            let overlaps = tok.char_start < ann.end && tok.char_end > ann.start;
            if overlaps && labels[i] == OUTSIDE {
                labels[i] = if first {
                    begin_label(ann.field)
                } else {
                    inside_label(ann.field)
                };
                first = false;
            }
        }
    }
    Ok(labels)
}

/// Glues predicted BIO labels back into a [`MetadataRecord`].
///
/// Contiguous `B-x (I-x)*` runs become candidate spans; an orphan `I-x`
/// run (no preceding `B-x`/`I-x`) is tolerated and treated as a span of
/// its own. When a field has several spans the one with the most tokens
/// wins, ties broken by earliest position. Span text is the token texts
/// joined by single spaces.
pub fn decode(tokens: &[Token], labels: &[String]) -> Result<MetadataRecord, BioError> {
    if tokens.len() != labels.len() {
        return Err(BioError::LengthMismatch { labels: labels.len(), tokens: tokens.len() });
    }
    let mut spans: Vec<(FieldKind, usize, usize)> = Vec::new(); // (field, start, len)
    let mut prev = ParsedLabel::Outside;
    for (i, label) in labels.iter().enumerate() {
        let parsed = parse_label(label)?;
        match parsed {
            ParsedLabel::Outside => {}
            ParsedLabel::Begin(f) => spans.push((f, i, 1)),
            ParsedLabel::Inside(f) => {
                let continues = matches!(prev, ParsedLabel::Begin(g) | ParsedLabel::Inside(g) if g == f);
                if continues {
                    spans.last_mut().expect("continuing an open span").2 += 1;
                } else {
                    spans.push((f, i, 1));
                }
            }
        }
        prev = parsed;
    }

    let mut record = MetadataRecord::default();
    for field in FieldKind::ALL {
        let best = spans
            .iter()
            .filter(|(f, _, _)| *f == field)
            .max_by(|a, b| a.2.cmp(&b.2).then(b.1.cmp(&a.1)));
        if let Some(&(_, start, len)) = best {
            let text: Vec<&str> = tokens[start..start + len].iter().map(|t| t.text.as_str()).collect();
            record.set(field, Some(text.join(" ")));
        }
    }
    Ok(record)
}

/// Checks BIO validity: `I-x` only after `B-x` or `I-x` of the same field.
pub fn is_valid_bio(labels: &[String]) -> bool {
    let mut prev: Option<ParsedLabel> = None;
    for label in labels {
        let parsed = match parse_label(label) {
            Ok(p) => p,
            Err(_) => return false,
        };
        if let ParsedLabel::Inside(f) = parsed {
            let ok = matches!(prev, Some(ParsedLabel::Begin(g) | ParsedLabel::Inside(g)) if g == f);
            if !ok {
                return false;
            }
        }
        prev = Some(parsed);
    }
    true
}
