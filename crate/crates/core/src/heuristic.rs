//! Rule-based baseline extractor.
//!
//! A reimplementation of the classic cue-and-pattern approach: fixed
//! degree-name patterns, cue words for author/advisor/program, keyword
//! matching for the institution line, and last-occurrence selection for
//! the year. Cue lists live in a small TOML config so they can be tuned
//! without code changes; [`HeuristicRules::default`] carries the built-in
//! lists.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{FieldKind, MetadataRecord};

#[derive(Debug, Error)]
pub enum HeuristicError {
    #[error("cannot read rules file {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed rules file: {0}")]
    Toml(#[from] toml::de::Error),
}

fn default_degree_patterns() -> Vec<String> {
    [
        "doctor of philosophy",
        "doctor of education",
        "doctor of science",
        "doctor of musical arts",
        "master of science",
        "master of arts",
        "master of engineering",
        "master of fine arts",
        "master of business administration",
        "bachelor of science",
        "bachelor of arts",
    ]
    .map(String::from)
    .to_vec()
}

fn default_author_cues() -> Vec<String> {
    ["by", "submitted by", "presented by", "written by"].map(String::from).to_vec()
}

fn default_advisor_cues() -> Vec<String> {
    [
        "supervised by",
        "directed by",
        "under the direction of",
        "under the supervision of",
        "major professor",
        "advisor",
        "adviser",
        "supervisor",
    ]
    .map(String::from)
    .to_vec()
}

fn default_program_cues() -> Vec<String> {
    ["department of", "graduate program in", "program in"].map(String::from).to_vec()
}

fn default_institution_keywords() -> Vec<String> {
    ["university", "institute", "college", "polytechnic"].map(String::from).to_vec()
}

fn default_year_min() -> u32 {
    1900
}

fn default_year_max() -> u32 {
    2099
}

/// Cue lists and patterns driving [`extract_heuristic`]. Every field has a
/// built-in default, so a rules file may override only what it needs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HeuristicRules {
    #[serde(default = "default_degree_patterns")]
    pub degree_patterns: Vec<String>,
    #[serde(default = "default_author_cues")]
    pub author_cues: Vec<String>,
    #[serde(default = "default_advisor_cues")]
    pub advisor_cues: Vec<String>,
    #[serde(default = "default_program_cues")]
    pub program_cues: Vec<String>,
    #[serde(default = "default_institution_keywords")]
    pub institution_keywords: Vec<String>,
    #[serde(default = "default_year_min")]
    pub year_min: u32,
    #[serde(default = "default_year_max")]
    pub year_max: u32,
}

impl Default for HeuristicRules {
    fn default() -> Self {
        HeuristicRules {
            degree_patterns: default_degree_patterns(),
            author_cues: default_author_cues(),
            advisor_cues: default_advisor_cues(),
            program_cues: default_program_cues(),
            institution_keywords: default_institution_keywords(),
            year_min: default_year_min(),
            year_max: default_year_max(),
        }
    }
}

impl HeuristicRules {
    pub fn from_toml_str(text: &str) -> Result<HeuristicRules, HeuristicError> {
        Ok(toml::from_str(text)?)
    }

    pub fn from_path(path: &Path) -> Result<HeuristicRules, HeuristicError> {
        let text = std::fs::read_to_string(path).map_err(|source| HeuristicError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        HeuristicRules::from_toml_str(&text)
    }
}

/// Words that disqualify a line from being read as a person's name.
const NAME_STOPWORDS: [&str; 8] = [
    "thesis",
    "dissertation",
    "faculty",
    "degree",
    "requirements",
    "partial",
    "fulfillment",
    "graduate",
];

fn collapse_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn looks_like_name(s: &str, rules: &HeuristicRules) -> bool {
    let words: Vec<&str> = s.split_whitespace().collect();
    if words.is_empty() || words.len() > 8 {
        return false;
    }
    if s.chars().any(|c| c.is_ascii_digit()) {
        return false;
    }
    if s.chars().filter(|c| c.is_alphabetic()).count() < 2 {
        return false;
    }
    let lower = s.to_lowercase();
    if NAME_STOPWORDS.iter().any(|w| lower.contains(w)) {
        return false;
    }
    if rules.institution_keywords.iter().any(|w| lower.contains(w)) {
        return false;
    }
    words.iter().all(|w| w.chars().all(|c| c.is_alphabetic() || matches!(c, '.' | ',' | '\'' | '-')))
}

fn trim_separators(s: &str) -> &str {
    s.trim_matches(|c: char| c.is_whitespace() || matches!(c, ':' | ',' | ';' | '-' | '.'))
}

/// Last 4-digit token within the configured year range.
fn find_year(text: &str, rules: &HeuristicRules) -> Option<String> {
    let mut found = None;
    for raw in text.split(|c: char| c.is_whitespace()) {
        let token = raw.trim_matches(|c: char| !c.is_ascii_digit());
        if token.len() == 4 && token.chars().all(|c| c.is_ascii_digit()) {
            if let Ok(y) = token.parse::<u32>() {
                if (rules.year_min..=rules.year_max).contains(&y) {
                    found = Some(token.to_string());
                }
            }
        }
    }
    found
}

/// Runs the rule set over rectified cover-page text.
///
/// Rules, in order: year (last in-range 4-digit token), degree (first line
/// matching a degree pattern, longest match), institution (first line with
/// an institution keyword), author (name-like text after an author cue, on
/// the same or next line), advisor (name following an advisor cue),
/// program (remainder of the first line with a program cue), and title
/// (the longest block of consecutive lines above the author cue that
/// matched no other rule). Fields with no match stay absent.
pub fn extract_heuristic(clean_text: &str, rules: &HeuristicRules) -> MetadataRecord {
    let mut record = MetadataRecord::default();
    if clean_text.trim().is_empty() {
        return record;
    }
    let lines: Vec<&str> = clean_text.lines().map(str::trim).collect();
    let lowered: Vec<String> = lines.iter().map(|l| l.to_lowercase()).collect();

    record.set(FieldKind::Year, find_year(clean_text, rules));

    // Degree: first line holding a pattern; longest pattern wins.
    let mut degree_line = None;
    'degree: for (i, low) in lowered.iter().enumerate() {
        let mut best: Option<&str> = None;
        for pat in &rules.degree_patterns {
            if low.contains(pat.as_str())
                && best.map(|b| pat.len() > b.len()).unwrap_or(true)
            {
                best = Some(pat);
            }
        }
        if let Some(pat) = best {
            record.set(FieldKind::Degree, Some(pat.to_string()));
            degree_line = Some(i);
            break 'degree;
        }
    }

    let institution_line = lowered
        .iter()
        .position(|low| rules.institution_keywords.iter().any(|k| low.contains(k.as_str())));
    if let Some(i) = institution_line {
        record.set(FieldKind::Institution, Some(collapse_ws(lines[i])));
    }

    // Author: a cue line ("by") followed by a name line, or an inline cue
    // ("submitted by jane doe").
    let mut author_cue_line = None;
    'author: for (i, low) in lowered.iter().enumerate() {
        for cue in &rules.author_cues {
            let cue = cue.as_str();
            if trim_separators(low) == cue {
                if let Some(next) = lines.get(i + 1) {
                    if looks_like_name(next, rules) {
                        record.set(FieldKind::Author, Some(collapse_ws(next)));
                        author_cue_line = Some(i);
                        break 'author;
                    }
                }
            } else if let Some(rest) = low.strip_prefix(&format!("{cue} ")) {
                let rest = rest.trim();
                if looks_like_name(rest, rules) {
                    record.set(FieldKind::Author, Some(collapse_ws(rest)));
                    author_cue_line = Some(i);
                    break 'author;
                }
            }
        }
    }

    // Advisor: name following a cue, same line or next.
    let mut advisor_line = None;
    'advisor: for (i, low) in lowered.iter().enumerate() {
        for cue in &rules.advisor_cues {
            if let Some(pos) = low.find(cue.as_str()) {
                advisor_line = Some(i);
                let after = trim_separators(&low[pos + cue.len()..]);
                if !after.is_empty() && looks_like_name(after, rules) {
                    record.set(FieldKind::Advisor, Some(collapse_ws(after)));
                    break 'advisor;
                }
                if after.is_empty() {
                    if let Some(next) = lines.get(i + 1) {
                        if looks_like_name(next, rules) {
                            record.set(FieldKind::Advisor, Some(collapse_ws(next)));
                            break 'advisor;
                        }
                    }
                }
            }
        }
    }

    let mut program_line = None;
    'program: for (i, low) in lowered.iter().enumerate() {
        for cue in &rules.program_cues {
            if let Some(pos) = low.find(cue.as_str()) {
                let after = trim_separators(&low[pos + cue.len()..]);
                if !after.is_empty() {
                    record.set(FieldKind::Program, Some(collapse_ws(after)));
                    program_line = Some(i);
                    break 'program;
                }
            }
        }
    }

    // Title: longest run of consecutive lines, above the author cue, that
    // no other rule claimed.
    let cue_line = author_cue_line
        .or_else(|| {
            [degree_line, institution_line, advisor_line, program_line]
                .into_iter()
                .flatten()
                .min()
        })
        .unwrap_or(lines.len());
    let claimed = |i: usize| -> bool {
        Some(i) == degree_line
            || Some(i) == advisor_line
            || Some(i) == program_line
            || rules.institution_keywords.iter().any(|k| lowered[i].contains(k.as_str()))
            || lines[i].is_empty()
    };
    let mut best: Option<(usize, Vec<&str>)> = None; // (total chars, lines)
    let mut current: Vec<&str> = Vec::new();
    for (i, line) in lines.iter().enumerate().take(cue_line) {
        if claimed(i) {
            if !current.is_empty() {
                let size: usize = current.iter().map(|l| l.len()).sum();
                if best.as_ref().map(|(b, _)| size > *b).unwrap_or(true) {
                    best = Some((size, std::mem::take(&mut current)));
                } else {
                    current.clear();
                }
            }
            continue;
        }
        current.push(line);
    }
    if !current.is_empty() {
        let size: usize = current.iter().map(|l| l.len()).sum();
        if best.as_ref().map(|(b, _)| size > *b).unwrap_or(true) {
            best = Some((size, current));
        }
    }
    if let Some((_, block)) = best {
        record.set(FieldKind::Title, Some(collapse_ws(&block.join(" "))));
    }

    record
}
