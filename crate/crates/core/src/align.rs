//! Character-level alignment between noisy OCR text and rectified text.
//!
//! The aligner is plain unit-cost Levenshtein over Unicode scalar values;
//! newline is an ordinary character. Alignment is what lets bounding
//! boxes, which only exist for OCR tokens, be transferred onto the clean
//! text that carries the annotations.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::hocr::{Page, Token};
use crate::textutil::{char_slice, whitespace_token_ranges};

/// Matched character positions between an OCR string and a clean string.
///
/// `pairs` holds `(ocr_offset, clean_offset)` for every match *and*
/// substitution in one optimal edit script, strictly increasing in both
/// components. `distance` is the Levenshtein distance of the two strings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignmentMap {
    pub pairs: Vec<(usize, usize)>,
    pub distance: usize,
}

#[derive(Debug, Error)]
pub enum AlignError {
    #[error("page has no tokens to project from")]
    EmptyPage,
}

/// Unit-cost Levenshtein distance, two-row dynamic program.
pub fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<u32> = (0..=b.len() as u32).collect();
    let mut cur: Vec<u32> = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i as u32 + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + u32::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()] as usize
}

/// Aligns `ocr_text` against `clean_text` and returns the matched-character
/// pairs of one optimal edit script.
///
/// Ties between optimal scripts are broken during traceback by preferring
/// match/substitution over insertion (a clean character with no OCR
/// counterpart) over deletion (an OCR character dropped by the cleanup).
pub fn align(ocr_text: &str, clean_text: &str) -> AlignmentMap {
    let a: Vec<char> = ocr_text.chars().collect();
    let b: Vec<char> = clean_text.chars().collect();
    let n = a.len();
    let m = b.len();

    // Full cost matrix; cover pages are small enough for the quadratic
    // table, and the traceback needs it.
    let w = m + 1;
    let mut dp: Vec<u32> = vec![0; (n + 1) * w];
    for (j, cell) in dp.iter_mut().enumerate().take(w) {
        *cell = j as u32;
    }
    for i in 1..=n {
        dp[i * w] = i as u32;
        for j in 1..=m {
            let sub = dp[(i - 1) * w + j - 1] + u32::from(a[i - 1] != b[j - 1]);
            let del = dp[(i - 1) * w + j] + 1;
            let ins = dp[i * w + j - 1] + 1;
            dp[i * w + j] = sub.min(del).min(ins);
        }
    }

    let mut pairs = Vec::new();
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = dp[i * w + j];
        if i > 0 && j > 0 && here == dp[(i - 1) * w + j - 1] + u32::from(a[i - 1] != b[j - 1]) {
            pairs.push((i - 1, j - 1));
            i -= 1;
            j -= 1;
        } else if j > 0 && here == dp[i * w + j - 1] + 1 {
            j -= 1;
        } else {
            i -= 1;
        }
    }
    pairs.reverse();
    AlignmentMap {
        pairs,
        distance: dp[n * w + m] as usize,
    }
}

/// Rebuilds the original casing of `clean_text` from its aligned OCR
/// characters: wherever an OCR character is the uppercase form of the
/// clean character it is paired with, the uppercase form wins.
///
/// The result has exactly the same character count as `clean_text`, so
/// character offsets remain valid.
pub fn restore_case(ocr_text: &str, clean_text: &str, map: &AlignmentMap) -> String {
    let ocr: Vec<char> = ocr_text.chars().collect();
    let mut out: Vec<char> = clean_text.chars().collect();
    for &(o, c) in &map.pairs {
        let oc = ocr[o];
        let cc = out[c];
        if oc != cc && oc.is_uppercase() && oc.to_lowercase().eq(std::iter::once(cc)) {
            out[c] = oc;
        }
    }
    out.into_iter().collect()
}

/// Projects OCR token boxes onto the whitespace tokens of `clean_text`.
///
/// Each clean token takes the bbox and line of the OCR token that owns the
/// majority of its aligned character positions (ties go to the earlier OCR
/// token). Clean tokens with no aligned characters inherit the donor of
/// the nearest preceding projected token, or the following one when
/// nothing precedes. Returned tokens carry clean-text offsets and a
/// per-line word index.
pub fn project_tokens(
    ocr_page: &Page,
    map: &AlignmentMap,
    clean_text: &str,
) -> Result<Vec<Token>, AlignError> {
    if ocr_page.tokens.is_empty() {
        return Err(AlignError::EmptyPage);
    }
    let ranges = whitespace_token_ranges(clean_text);
    if ranges.is_empty() {
        return Ok(Vec::new());
    }

    let ocr_len = ocr_page.tokens.iter().map(|t| t.char_end).max().unwrap_or(0);
    let mut owner: Vec<Option<usize>> = vec![None; ocr_len];
    for (idx, tok) in ocr_page.tokens.iter().enumerate() {
        for slot in &mut owner[tok.char_start..tok.char_end] {
            *slot = Some(idx);
        }
    }

    let clean_len = clean_text.chars().count();
    let mut clean_to_ocr: Vec<Option<usize>> = vec![None; clean_len];
    for &(o, c) in &map.pairs {
        if o < ocr_len && c < clean_len {
            clean_to_ocr[c] = Some(o);
        }
    }

    let mut donors: Vec<Option<usize>> = Vec::with_capacity(ranges.len());
    for &(start, end) in &ranges {
        let mut votes: BTreeMap<usize, usize> = BTreeMap::new();
        for slot in &clean_to_ocr[start..end] {
            if let Some(tok_idx) = slot.and_then(|ocr_pos| owner[ocr_pos]) {
                *votes.entry(tok_idx).or_insert(0) += 1;
            }
        }
        let mut best: Option<(usize, usize)> = None;
        for (tok_idx, count) in votes {
            if best.map(|(_, c)| count > c).unwrap_or(true) {
                best = Some((tok_idx, count));
            }
        }
        donors.push(best.map(|(idx, _)| idx));
    }

    // Fill gaps from the nearest preceding donor, then from the following.
    let mut last: Option<usize> = None;
    for d in donors.iter_mut() {
        match d {
            Some(idx) => last = Some(*idx),
            None => *d = last,
        }
    }
    let mut next: Option<usize> = None;
    for d in donors.iter_mut().rev() {
        match d {
            Some(idx) => next = Some(*idx),
            None => *d = next,
        }
    }

    let mut words_on_line: BTreeMap<usize, usize> = BTreeMap::new();
    let mut out = Vec::with_capacity(ranges.len());
    for (&(start, end), donor) in ranges.iter().zip(&donors) {
        // When no clean token aligned onto any OCR token at all, fall back
        // to the first token so projection stays total.
        let donor = donor.unwrap_or(0);
        let src = &ocr_page.tokens[donor];
        let word_index = words_on_line.entry(src.line_index).or_insert(0);
        out.push(Token {
            text: char_slice(clean_text, start, end).to_string(),
            line_index: src.line_index,
            word_index: *word_index,
            bbox: src.bbox,
            char_start: start,
            char_end: end,
        });
        *word_index += 1;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hocr::BBox;
    use proptest::prelude::*;

    /// Independent oracle: naive full-recursion Levenshtein with memo.
    fn oracle_distance(a: &str, b: &str) -> usize {
        fn go(a: &[char], b: &[char], i: usize, j: usize, memo: &mut Vec<Vec<Option<usize>>>) -> usize {
            if i == 0 {
                return j;
            }
            if j == 0 {
                return i;
            }
            if let Some(v) = memo[i][j] {
                return v;
            }
            let sub = go(a, b, i - 1, j - 1, memo) + usize::from(a[i - 1] != b[j - 1]);
            let del = go(a, b, i - 1, j, memo) + 1;
            let ins = go(a, b, i, j - 1, memo) + 1;
            let v = sub.min(del).min(ins);
            memo[i][j] = Some(v);
            v
        }
        let av: Vec<char> = a.chars().collect();
        let bv: Vec<char> = b.chars().collect();
        let mut memo = vec![vec![None; bv.len() + 1]; av.len() + 1];
        go(&av, &bv, av.len(), bv.len(), &mut memo)
    }

    fn page_of(words: &[(&str, u32, u32, u32, u32, usize)]) -> Page {
        // (text, x1, y1, x2, y2, line)
        let mut tokens = Vec::new();
        let mut cursor = 0usize;
        let mut last_line = None;
        let mut word_index = 0usize;
        for &(text, x1, y1, x2, y2, line) in words {
            if last_line.is_some() {
                cursor += 1; // space or newline separator
            }
            if last_line.map(|l| l != line).unwrap_or(false) {
                word_index = 0;
            }
            let len = text.chars().count();
            tokens.push(Token {
                text: text.to_string(),
                line_index: line,
                word_index,
                bbox: BBox { x1, y1, x2, y2 },
                char_start: cursor,
                char_end: cursor + len,
            });
            cursor += len;
            word_index += 1;
            last_line = Some(line);
        }
        Page { width: 1000, height: 1000, tokens }
    }

    #[test]
    fn distance_basics() {
        assert_eq!(edit_distance("", "abc"), 3);
        assert_eq!(edit_distance("kitten", "sitting"), 3);
        assert_eq!(oracle_distance("kitten", "sitting"), 3);
        assert_eq!(edit_distance("same", "same"), 0);
        assert_eq!(edit_distance("©ab", "cab"), 1);
    }

    #[test]
    fn align_identity() {
        let m = align("abc", "abc");
        assert_eq!(m.distance, 0);
        assert_eq!(m.pairs, vec![(0, 0), (1, 1), (2, 2)]);
    }

    #[test]
    fn align_pairs_substitutions() {
        let m = align("he1lo", "hello");
        assert_eq!(m.distance, 1);
        assert!(m.pairs.contains(&(2, 2)));
        assert_eq!(m.pairs.len(), 5);
    }

    #[test]
    fn align_empty_sides() {
        let m = align("", "x");
        assert_eq!(m.distance, 1);
        assert!(m.pairs.is_empty());
        let m = align("xy", "");
        assert_eq!(m.distance, 2);
        assert!(m.pairs.is_empty());
    }

    #[test]
    fn restore_case_from_donor() {
        let ocr = "The Massachusetts lnstitute";
        let clean = "the massachusetts institute";
        let m = align(ocr, clean);
        let restored = restore_case(ocr, clean, &m);
        // 'l' in "lnstitute" is an OCR error, not a case variant, so the
        // clean 'i' survives; everything else regains its capitals.
        assert_eq!(restored, "The Massachusetts institute");
    }

    #[test]
    fn project_identity_keeps_boxes() {
        let page = page_of(&[
            ("alpha", 0, 900, 50, 950, 0),
            ("beta", 60, 900, 100, 950, 0),
            ("gamma", 0, 800, 50, 850, 1),
        ]);
        let text = page.text();
        let m = align(&text, &text);
        let projected = project_tokens(&page, &m, &text).unwrap();
        assert_eq!(projected.len(), 3);
        for (p, t) in projected.iter().zip(&page.tokens) {
            assert_eq!(p.bbox, t.bbox);
            assert_eq!(p.line_index, t.line_index);
            assert_eq!(p.word_index, t.word_index);
            assert_eq!(p.text, t.text);
        }
    }

    #[test]
    fn project_majority_overlap_on_merged_hyphenation() {
        // OCR split "thermo-fluid" into two tokens; the clean text keeps
        // one. The merged token gets the box of the larger OCR piece.
        let page = page_of(&[
            ("thermo-", 0, 900, 70, 950, 0),
            ("fluid", 80, 900, 130, 950, 0),
            ("dynamics", 140, 900, 220, 950, 0),
        ]);
        let ocr = page.text();
        let clean = "thermo-fluid dynamics";
        let m = align(&ocr, clean);
        let projected = project_tokens(&page, &m, clean).unwrap();
        assert_eq!(projected.len(), 2);
        assert_eq!(projected[0].text, "thermo-fluid");
        assert_eq!(projected[0].bbox, page.tokens[0].bbox);
        assert_eq!(projected[1].text, "dynamics");
        assert_eq!(projected[1].bbox, page.tokens[2].bbox);
    }

    #[test]
    fn project_falls_back_to_neighbors() {
        let page = page_of(&[("alpha", 0, 900, 50, 950, 0), ("beta", 60, 900, 100, 950, 0)]);
        let ocr = page.text();

        // Token inserted by the human cleanup: inherits the preceding donor.
        let clean = "alpha zzzz beta";
        let projected = project_tokens(&page, &align(&ocr, clean), clean).unwrap();
        assert_eq!(projected[1].bbox, page.tokens[0].bbox);

        // Nothing precedes: inherits the following donor.
        let clean = "zzzz alpha beta";
        let projected = project_tokens(&page, &align(&ocr, clean), clean).unwrap();
        assert_eq!(projected[0].bbox, page.tokens[0].bbox);
    }

    #[test]
    fn project_requires_tokens() {
        let page = Page { width: 10, height: 10, tokens: vec![] };
        let m = align("", "word");
        assert!(matches!(project_tokens(&page, &m, "word"), Err(AlignError::EmptyPage)));
    }

    proptest! {
        #[test]
        fn distance_matches_oracle(a in "[abcd]{0,12}", b in "[abcd]{0,12}") {
            prop_assert_eq!(edit_distance(&a, &b), oracle_distance(&a, &b));
        }

        #[test]
        fn distance_is_a_metric(a in "[abcd]{0,10}", b in "[abcd]{0,10}", c in "[abcd]{0,10}") {
            let ab = edit_distance(&a, &b);
            let ba = edit_distance(&b, &a);
            prop_assert_eq!(ab, ba);
            prop_assert_eq!(ab == 0, a == b);
            let ac = edit_distance(&a, &c);
            let cb = edit_distance(&c, &b);
            prop_assert!(ab <= ac + cb);
        }

        #[test]
        fn alignment_is_monotone_and_consistent(a in "[abcd]{0,12}", b in "[abcd]{0,12}") {
            let m = align(&a, &b);
            prop_assert_eq!(m.distance, edit_distance(&a, &b));
            for w in m.pairs.windows(2) {
                prop_assert!(w[0].0 < w[1].0);
                prop_assert!(w[0].1 < w[1].1);
            }
            for &(o, c) in &m.pairs {
                prop_assert!(o < a.chars().count());
                prop_assert!(c < b.chars().count());
            }
        }

        #[test]
        fn projection_is_total(words in proptest::collection::vec("[a-z]{1,6}", 1..8),
                               clean in "[a-z ]{1,30}") {
            let specs: Vec<(&str, u32, u32, u32, u32, usize)> = words
                .iter()
                .enumerate()
                .map(|(i, w)| (w.as_str(), (i as u32) * 100, 0, (i as u32) * 100 + 90, 50, 0))
                .collect();
            let page = page_of(&specs);
            let ocr = page.text();
            let m = align(&ocr, &clean);
            let n_clean = clean.split_whitespace().count();
            let projected = project_tokens(&page, &m, &clean).unwrap();
            prop_assert_eq!(projected.len(), n_clean);
        }
    }
}
