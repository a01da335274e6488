//! Tesseract hOCR parsing.
//!
//! hOCR stores word boxes in image coordinates (origin top-left, y grows
//! downward). All downstream geometry here uses the opposite convention:
//! the origin is the bottom-left page corner, `y1` is the bottom edge of a
//! box and `y2` its top edge, both measured up from the bottom margin. The
//! parser performs that flip at ingest so only one convention exists past
//! this module.

use std::fmt;

use thiserror::Error;

/// Axis-aligned box in bottom-left-origin pixel coordinates.
///
/// `x1`/`x2` are the left/right edges measured from the left margin;
/// `y1`/`y2` are the bottom/top edges measured from the bottom margin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct BBox {
    pub x1: u32,
    pub y1: u32,
    pub x2: u32,
    pub y2: u32,
}

impl BBox {
    pub fn new(x1: u32, y1: u32, x2: u32, y2: u32) -> Result<BBox, HocrError> {
        if x1 > x2 || y1 > y2 {
            return Err(HocrError::InvalidBox { x1, y1, x2, y2 });
        }
        Ok(BBox { x1, y1, x2, y2 })
    }
}

impl fmt::Display for BBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})..({}, {})", self.x1, self.y1, self.x2, self.y2)
    }
}

/// One OCR word with its position on the page and its character range in
/// the page text (offsets in Unicode scalar values).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub line_index: usize,
    pub word_index: usize,
    pub bbox: BBox,
    pub char_start: usize,
    pub char_end: usize,
}

/// A parsed page: dimensions plus tokens ordered by (line, word).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Page {
    pub width: u32,
    pub height: u32,
    pub tokens: Vec<Token>,
}

impl Page {
    /// Plain-text reconstruction: words joined by single spaces, lines by
    /// newlines. Token `char_start`/`char_end` index into this string.
    pub fn text(&self) -> String {
        let mut out = String::new();
        let mut last_line = None;
        for tok in &self.tokens {
            match last_line {
                None => {}
                Some(line) if line == tok.line_index => out.push(' '),
                Some(_) => out.push('\n'),
            }
            out.push_str(&tok.text);
            last_line = Some(tok.line_index);
        }
        out
    }

    /// Index of the first token of each line, keyed by line index.
    pub fn line_starts(&self) -> Vec<usize> {
        let mut starts = Vec::new();
        for (i, tok) in self.tokens.iter().enumerate() {
            if starts.len() == tok.line_index {
                starts.push(i);
            }
        }
        starts
    }
}

#[derive(Debug, Error)]
pub enum HocrError {
    #[error("input does not look like markup (no elements found)")]
    NotMarkup,
    #[error("no ocr_page element with page dimensions")]
    MissingPage,
    #[error("invalid box: x1={x1} y1={y1} x2={x2} y2={y2}")]
    InvalidBox { x1: u32, y1: u32, x2: u32, y2: u32 },
    #[error("page has zero {0} dimension")]
    ZeroDimension(&'static str),
}

/// Normalizes a box against the page size, returning `(x1n, y1n, y2n)`
/// ratios clamped to `[0, 1]`. These are the raw values behind the three
/// visual features.
pub fn normalize_bbox(bbox: &BBox, page: &Page) -> Result<(f64, f64, f64), HocrError> {
    if page.width == 0 {
        return Err(HocrError::ZeroDimension("width"));
    }
    if page.height == 0 {
        return Err(HocrError::ZeroDimension("height"));
    }
    let clamp = |v: f64| v.clamp(0.0, 1.0);
    Ok((
        clamp(bbox.x1 as f64 / page.width as f64),
        clamp(bbox.y1 as f64 / page.height as f64),
        clamp(bbox.y2 as f64 / page.height as f64),
    ))
}

/// Element classes that open a new text line in Tesseract output.
const LINE_CLASSES: [&str; 4] = ["ocr_line", "ocr_textfloat", "ocr_header", "ocr_caption"];

pub fn parse_hocr(content: &str) -> Result<Page, HocrError> {
    parse_hocr_with_warnings(content).map(|(page, _)| page)
}

/// Parses hOCR, also returning one warning per skipped word (malformed or
/// out-of-page boxes, whitespace-only text, words outside a line).
pub fn parse_hocr_with_warnings(content: &str) -> Result<(Page, Vec<String>), HocrError> {
    if !content.contains('<') {
        return Err(HocrError::NotMarkup);
    }

    let mut warnings = Vec::new();
    let mut page_dims: Option<(u32, u32)> = None;
    let mut tokens: Vec<Token> = Vec::new();

    // Element stack of (name, opened_word). `word` holds the in-progress
    // word: (stack depth at open, title attr, collected text).
    let mut stack: Vec<String> = Vec::new();
    let mut word: Option<(usize, String, String)> = None;
    let mut pending_line = false;
    let mut started_lines = 0usize;
    let mut line_index = 0usize;
    let mut word_index = 0usize;
    let mut char_cursor = 0usize;

    let mut rest = content;
    while let Some(lt) = rest.find('<') {
        let (text, after) = rest.split_at(lt);
        if let Some((_, _, buf)) = word.as_mut() {
            buf.push_str(text);
        }
        rest = after;

        if rest.starts_with("<!--") {
            match rest.find("-->") {
                Some(end) => rest = &rest[end + 3..],
                None => break,
            }
            continue;
        }
        let gt = match find_tag_end(rest) {
            Some(i) => i,
            None => break,
        };
        let tag = &rest[1..gt];
        rest = &rest[gt + 1..];

        if tag.starts_with('!') || tag.starts_with('?') {
            continue;
        }
        if let Some(name) = tag.strip_prefix('/') {
            let name = name.trim();
            // Pop to the matching open tag; ignore closes that match nothing.
            if !stack.iter().any(|t| t == name) {
                continue;
            }
            while let Some(top) = stack.pop() {
                let done = top == name;
                if let Some((depth, title, buf)) = word.clone() {
                    if stack.len() <= depth {
                        finish_word(
                            &title,
                            &buf,
                            page_dims,
                            &mut tokens,
                            &mut warnings,
                            &mut pending_line,
                            &mut started_lines,
                            &mut line_index,
                            &mut word_index,
                            &mut char_cursor,
                        );
                        word = None;
                    }
                }
                if done {
                    break;
                }
            }
            continue;
        }

        let self_closing = tag.ends_with('/');
        let tag = tag.trim_end_matches('/');
        let (name, attrs) = split_tag(tag);
        let class = attr_value(attrs, "class").unwrap_or_default();
        let title = attr_value(attrs, "title").unwrap_or_default();

        if class.split_whitespace().any(|c| c == "ocr_page") {
            if page_dims.is_none() {
                match parse_title_bbox(&title) {
                    Some((0, 0, w, h)) => page_dims = Some((w, h)),
                    Some((x0, y0, x1, y1)) => page_dims = Some((x1 - x0.min(x1), y1 - y0.min(y1))),
                    None => return Err(HocrError::MissingPage),
                }
            }
        } else if class.split_whitespace().any(|c| LINE_CLASSES.contains(&c)) {
            pending_line = true;
        } else if class.split_whitespace().any(|c| c == "ocrx_word") && !self_closing
            && word.is_none() {
                word = Some((stack.len(), title.to_string(), String::new()));
            }

        if !self_closing {
            stack.push(name.to_string());
        }
    }

    let (width, height) = page_dims.ok_or(HocrError::MissingPage)?;
    Ok((Page { width, height, tokens }, warnings))
}

/// Finds the index of the `>` closing the tag that starts at `rest[0]`,
/// skipping `>` inside quoted attribute values.
fn find_tag_end(rest: &str) -> Option<usize> {
    let mut quote: Option<char> = None;
    for (i, c) in rest.char_indices() {
        match (quote, c) {
            (None, '"') | (None, '\'') => quote = Some(c),
            (Some(q), c) if c == q => quote = None,
            (None, '>') => return Some(i),
            _ => {}
        }
    }
    None
}

fn split_tag(tag: &str) -> (&str, &str) {
    match tag.find(|c: char| c.is_whitespace()) {
        Some(i) => (&tag[..i], &tag[i..]),
        None => (tag, ""),
    }
}

/// Extracts a quoted attribute value; both quote styles accepted.
fn attr_value(attrs: &str, key: &str) -> Option<String> {
    let mut rest = attrs;
    while let Some(pos) = rest.find(key) {
        let before_ok = pos == 0
            || rest[..pos]
                .chars()
                .last()
                .map(|c| c.is_whitespace())
                .unwrap_or(true);
        let after = &rest[pos + key.len()..];
        let after_trim = after.trim_start();
        if before_ok && after_trim.starts_with('=') {
            let v = after_trim[1..].trim_start();
            let quote = v.chars().next()?;
            if quote == '"' || quote == '\'' {
                let body = &v[1..];
                if let Some(end) = body.find(quote) {
                    return Some(unescape(&body[..end]));
                }
            }
            return None;
        }
        rest = &rest[pos + key.len()..];
    }
    None
}

fn unescape(s: &str) -> String {
    if !s.contains('&') {
        return s.to_string();
    }
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        rest = &rest[amp..];
        let semi = rest.find(';');
        match semi {
            Some(end) if end <= 10 => {
                let entity = &rest[1..end];
                let decoded = match entity {
                    "amp" => Some('&'),
                    "lt" => Some('<'),
                    "gt" => Some('>'),
                    "quot" => Some('"'),
                    "apos" => Some('\''),
                    _ => entity
                        .strip_prefix("#x")
                        .or_else(|| entity.strip_prefix("#X"))
                        .and_then(|h| u32::from_str_radix(h, 16).ok())
                        .or_else(|| entity.strip_prefix('#').and_then(|d| d.parse().ok()))
                        .and_then(char::from_u32),
                };
                match decoded {
                    Some(c) => {
                        out.push(c);
                        rest = &rest[end + 1..];
                    }
                    None => {
                        out.push('&');
                        rest = &rest[1..];
                    }
                }
            }
            _ => {
                out.push('&');
                rest = &rest[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

/// Pulls `bbox x0 y0 x1 y1` out of an hOCR `title` attribute.
fn parse_title_bbox(title: &str) -> Option<(u32, u32, u32, u32)> {
    for part in title.split(';') {
        let mut it = part.split_whitespace();
        if it.next() == Some("bbox") {
            let mut next = || it.next().and_then(|v| v.parse::<u32>().ok());
            let (x0, y0, x1, y1) = (next()?, next()?, next()?, next()?);
            return Some((x0, y0, x1, y1));
        }
    }
    None
}

#[allow(clippy::too_many_arguments)]
fn finish_word(
    title: &str,
    raw_text: &str,
    page_dims: Option<(u32, u32)>,
    tokens: &mut Vec<Token>,
    warnings: &mut Vec<String>,
    pending_line: &mut bool,
    started_lines: &mut usize,
    line_index: &mut usize,
    word_index: &mut usize,
    char_cursor: &mut usize,
) {
    let text = unescape(raw_text);
    let text = text.trim();
    if text.is_empty() {
        return;
    }
    if text.chars().any(char::is_whitespace) {
        warnings.push(format!("word {text:?} contains internal whitespace; skipped"));
        return;
    }
    let (width, height) = match page_dims {
        Some(d) => d,
        None => {
            warnings.push(format!("word {text:?} appears before the ocr_page element; skipped"));
            return;
        }
    };
    if *started_lines == 0 && !*pending_line {
        warnings.push(format!("word {text:?} appears outside any line element; skipped"));
        return;
    }
    let (hx0, hy0, hx1, hy1) = match parse_title_bbox(title) {
        Some(b) => b,
        None => {
            warnings.push(format!("word {text:?} has a malformed bbox attribute; skipped"));
            return;
        }
    };
    if hx0 > hx1 || hy0 > hy1 || hx1 > width || hy1 > height {
        warnings.push(format!(
            "word {text:?} bbox ({hx0} {hy0} {hx1} {hy1}) does not fit the page; skipped"
        ));
        return;
    }
    // Flip to bottom-left origin.
    let bbox = BBox {
        x1: hx0,
        y1: height - hy1,
        x2: hx1,
        y2: height - hy0,
    };

    if *pending_line {
        if *started_lines > 0 {
            *line_index += 1;
            *char_cursor += 1; // newline in the reconstruction
        }
        *started_lines += 1;
        *word_index = 0;
        *pending_line = false;
    } else if *word_index > 0 || !tokens.is_empty() {
        *char_cursor += 1; // space before this word
    }

    let char_start = *char_cursor;
    let char_len = text.chars().count();
    *char_cursor += char_len;
    tokens.push(Token {
        text: text.to_string(),
        line_index: *line_index,
        word_index: *word_index,
        bbox,
        char_start,
        char_end: char_start + char_len,
    });
    *word_index += 1;
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Serializes a [`Page`] back to minimal hOCR (top-left-origin boxes, one
/// `ocr_line` per line). Used by the synthetic corpus writer and by
/// parse/serialize round-trip tests.
pub fn to_hocr(page: &Page) -> String {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str("<html xmlns=\"http://www.w3.org/1999/xhtml\">\n<head>\n");
    out.push_str("<meta name=\"ocr-system\" content=\"tesseract\"/>\n");
    out.push_str(
        "<meta name=\"ocr-capabilities\" content=\"ocr_page ocr_line ocrx_word\"/>\n</head>\n<body>\n",
    );
    out.push_str(&format!(
        "<div class='ocr_page' id='page_1' title='image \"page.tif\"; bbox 0 0 {} {}; ppageno 0'>\n",
        page.width, page.height
    ));
    let h = page.height;
    let mut line = usize::MAX;
    let mut word_id = 0usize;
    let mut open = false;
    for tok in &page.tokens {
        if tok.line_index != line {
            if open {
                out.push_str("</span>\n");
            }
            line = tok.line_index;
            let members: Vec<&Token> =
                page.tokens.iter().filter(|t| t.line_index == line).collect();
            let lx0 = members.iter().map(|t| t.bbox.x1).min().unwrap_or(0);
            let lx1 = members.iter().map(|t| t.bbox.x2).max().unwrap_or(0);
            let ly0 = members.iter().map(|t| h - t.bbox.y2).min().unwrap_or(0);
            let ly1 = members.iter().map(|t| h - t.bbox.y1).max().unwrap_or(0);
            out.push_str(&format!(
                "<span class='ocr_line' id='line_1_{}' title='bbox {} {} {} {}'>",
                line + 1,
                lx0,
                ly0,
                lx1,
                ly1
            ));
            open = true;
        }
        word_id += 1;
        out.push_str(&format!(
            "<span class='ocrx_word' id='word_1_{}' title='bbox {} {} {} {}; x_wconf 95'>{}</span>",
            word_id,
            tok.bbox.x1,
            h - tok.bbox.y2,
            tok.bbox.x2,
            h - tok.bbox.y1,
            escape(&tok.text)
        ));
    }
    if open {
        out.push_str("</span>\n");
    }
    out.push_str("</div>\n</body>\n</html>\n");
    out
}
