//! Small helpers for working with character (Unicode scalar) offsets.

/// Slices `s` by character offsets. Panics if the range is out of bounds,
/// mirroring byte slicing.
pub(crate) fn char_slice(s: &str, start: usize, end: usize) -> &str {
    let mut iter = s.char_indices();
    let byte_start = iter
        .nth(start)
        .map(|(b, _)| b)
        .unwrap_or_else(|| panic!("char start {start} out of bounds"));
    if end == start {
        return &s[byte_start..byte_start];
    }
    let byte_end = s
        .char_indices()
        .nth(end - 1)
        .map(|(b, c)| b + c.len_utf8())
        .unwrap_or_else(|| panic!("char end {end} out of bounds"));
    &s[byte_start..byte_end]
}

/// Whitespace tokenization returning character ranges `(start, end)` per
/// token, in order.
pub(crate) fn whitespace_token_ranges(s: &str) -> Vec<(usize, usize)> {
    let mut ranges = Vec::new();
    let mut start = None;
    let mut pos = 0usize;
    for c in s.chars() {
        if c.is_whitespace() {
            if let Some(st) = start.take() {
                ranges.push((st, pos));
            }
        } else if start.is_none() {
            start = Some(pos);
        }
        pos += 1;
    }
    if let Some(st) = start {
        ranges.push((st, pos));
    }
    ranges
}
