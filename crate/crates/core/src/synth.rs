//! Synthetic cover-page corpus generator.
//!
//! Produces self-contained documents in the corpus layout: an hOCR page
//! with noisy OCR tokens, the rectified lowercase transcript, standoff
//! annotations, and a ground-truth record. Layouts follow the usual
//! dissertation cover conventions, so the positional signal is real:
//! titles sit in the upper half, authors mid-page, advisors and the year
//! near the bottom.
//!
//! Several ambiguities are built in on purpose, mirroring what makes the
//! real task hard: a share of titles reuse program vocabulary in title
//! case (confusable with the department line on text features alone),
//! some pages carry a second year mid-page, advisor names often precede
//! their cue, and boilerplate sits directly above some titles.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::corpus::{Annotation, FieldKind, MetadataRecord};
use crate::hocr::{to_hocr, BBox, Page, Token};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("io error at {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub docs: usize,
    pub seed: u64,
    /// Per-word probability of an OCR corruption.
    pub noise: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig { docs: 240, seed: 42, noise: 0.08 }
    }
}

/// One generated document, in memory.
#[derive(Debug, Clone)]
pub struct SynthDocument {
    pub doc_id: String,
    pub page: Page,
    pub hocr: String,
    pub clean_text: String,
    pub annotations: Vec<Annotation>,
    pub ground_truth: MetadataRecord,
}

const PAGE_W: u32 = 1700;
const PAGE_H: u32 = 2200;

const FIRST_NAMES: [&str; 24] = [
    "john", "mary", "james", "patricia", "robert", "jennifer", "michael", "linda", "william",
    "elizabeth", "david", "barbara", "richard", "susan", "joseph", "carol", "thomas", "sarah",
    "charles", "karen", "daniel", "nancy", "margaret", "walter",
];

const LAST_NAMES: [&str; 28] = [
    "smith", "johnson", "williams", "brown", "jones", "garcia", "miller", "davis", "wilson",
    "anderson", "taylor", "moore", "jackson", "martin", "thompson", "white", "harris", "clark",
    "lewis", "robinson", "walker", "young", "allen", "wright", "scott", "torres", "hill",
    "baker",
];

const PROGRAMS: [&str; 14] = [
    "mechanical engineering",
    "electrical engineering",
    "civil engineering",
    "chemical engineering",
    "computer science",
    "applied mathematics",
    "physics",
    "chemistry",
    "economics",
    "psychology",
    "philosophy",
    "sociology",
    "political science",
    "materials science",
];

const INSTITUTIONS: [&str; 10] = [
    "state university of new york",
    "massachusetts institute of technology",
    "university of illinois",
    "cornell university",
    "university of michigan",
    "georgia institute of technology",
    "purdue university",
    "university of texas",
    "columbia university",
    "university of wisconsin",
];

const DEGREES: [&str; 5] = [
    "doctor of philosophy",
    "doctor of philosophy",
    "doctor of philosophy",
    "master of science",
    "master of arts",
];

const MONTHS: [&str; 12] = [
    "january", "february", "march", "april", "may", "june", "july", "august", "september",
    "october", "november", "december",
];

const LOCATIONS: [&str; 10] = [
    "ann arbor, michigan",
    "cambridge, massachusetts",
    "ithaca, new york",
    "west lafayette, indiana",
    "austin, texas",
    "madison, wisconsin",
    "urbana, illinois",
    "atlanta, georgia",
    "new york, new york",
    "berkeley, california",
];

const PHENOMENA: [&str; 12] = [
    "thermodynamics", "kinetics", "stability", "dynamics", "structure", "synthesis",
    "analysis", "optimization", "behavior", "measurement", "modeling", "characterization",
];

const TOPICS: [&str; 12] = [
    "separated two-phase flow",
    "turbulent boundary layers",
    "nonlinear oscillators",
    "semiconductor junctions",
    "polymer networks",
    "crystal lattices",
    "neural conduction",
    "market equilibria",
    "protein folding",
    "plasma confinement",
    "finite element methods",
    "acoustic waves",
];

const SETTINGS: [&str; 6] = [
    "vertical channels",
    "high pressure environments",
    "low temperature regimes",
    "rotating frames",
    "shear flows",
    "strong magnetic fields",
];

/// Words kept lowercase in title-case rendering.
const SMALL_WORDS: [&str; 9] = ["of", "the", "in", "and", "a", "an", "to", "for", "on"];

fn title_case_word(word: &str, force: bool) -> String {
    if !force && SMALL_WORDS.contains(&word) {
        return word.to_string();
    }
    let mut chars = word.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().collect::<String>() + chars.as_str(),
        None => String::new(),
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Casing {
    Lower,
    Title,
    Caps,
}

fn apply_casing(words: &[String], casing: Casing) -> Vec<String> {
    match casing {
        Casing::Lower => words.to_vec(),
        Casing::Caps => words.iter().map(|w| w.to_uppercase()).collect(),
        Casing::Title => words
            .iter()
            .enumerate()
            .map(|(i, w)| title_case_word(w, i == 0))
            .collect(),
    }
}

struct LineSpec {
    /// Words as printed on the page (cased, pre-noise).
    printed: Vec<String>,
    /// Words of the rectified transcript (lowercase truth).
    clean: Vec<String>,
    big: bool,
    gap_after: u32,
    /// Minimum `y_top` in pixels; blocks are anchored to rough page
    /// fractions so each field keeps a characteristic vertical band.
    anchor: Option<u32>,
}

fn line(words: &[String], casing: Casing, big: bool, gap_after: u32) -> LineSpec {
    LineSpec {
        printed: apply_casing(words, casing),
        clean: words.to_vec(),
        big,
        gap_after,
        anchor: None,
    }
}

fn anchored(mut spec: LineSpec, fraction: f64, rng: &mut ChaCha8Rng) -> LineSpec {
    let base = (PAGE_H as f64 * fraction) as u32;
    spec.anchor = Some(base + rng.gen_range(0..44));
    spec
}

fn words_of(text: &str) -> Vec<String> {
    text.split_whitespace().map(String::from).collect()
}

/// (line, word) inclusive endpoints of an annotation over clean words.
struct AnnSpec {
    field: FieldKind,
    start: (usize, usize),
    end: (usize, usize),
}

struct Draft {
    lines: Vec<LineSpec>,
    anns: Vec<AnnSpec>,
}

impl Draft {
    fn push(&mut self, spec: LineSpec) -> usize {
        self.lines.push(spec);
        self.lines.len() - 1
    }

    /// Annotates a word range of the line just pushed.
    fn annotate_words(&mut self, field: FieldKind, line: usize, first: usize, last: usize) {
        self.anns.push(AnnSpec { field, start: (line, first), end: (line, last) });
    }
}

fn pick<'a>(rng: &mut ChaCha8Rng, items: &[&'a str]) -> &'a str {
    items.choose(rng).expect("non-empty bank")
}

fn person_name(rng: &mut ChaCha8Rng) -> String {
    let first = pick(rng, &FIRST_NAMES);
    let last = pick(rng, &LAST_NAMES);
    if rng.gen_bool(0.6) {
        let initial = (b'a' + rng.gen_range(0..26u8)) as char;
        format!("{first} {initial}. {last}")
    } else {
        format!("{first} {last}")
    }
}

fn title_words(rng: &mut ChaCha8Rng) -> Vec<String> {
    let text = if rng.gen_bool(0.30) {
        // Reuses program vocabulary: confusable with the department line.
        let program = pick(rng, &PROGRAMS);
        match rng.gen_range(0..3) {
            0 => format!("advances in {program}"),
            1 => format!("studies in theoretical {program}"),
            _ => format!("applications of {program} to {}", pick(rng, &TOPICS)),
        }
    } else {
        let phen = pick(rng, &PHENOMENA);
        let topic = pick(rng, &TOPICS);
        match rng.gen_range(0..4) {
            0 => format!("a study of the {phen} of {topic}"),
            1 => format!("the {phen} of {topic} in {}", pick(rng, &SETTINGS)),
            2 => format!("on the {phen} of {topic}"),
            _ => format!("{phen} of {topic} under {}", pick(rng, &SETTINGS)),
        }
    };
    words_of(&text)
}

/// OCR lookalike substitutions.
fn substitute_char(c: char) -> Option<char> {
    Some(match c.to_ascii_lowercase() {
        'o' => '0',
        'l' => '1',
        'i' => 'l',
        'e' => 'c',
        'a' => 'o',
        's' => '5',
        'b' => '6',
        'g' => '9',
        'n' => 'm',
        'r' => 'n',
        _ => return None,
    })
}

/// Applies one corruption to a printed word.
fn corrupt(word: &str, rng: &mut ChaCha8Rng) -> String {
    let chars: Vec<char> = word.chars().collect();
    let pos = rng.gen_range(0..chars.len());
    let roll = rng.gen_range(0..10);
    let mut out = chars.clone();
    if roll < 6 {
        if let Some(sub) = substitute_char(chars[pos]) {
            out[pos] = sub;
        } else {
            out.insert(pos, '.');
        }
    } else if roll < 8 {
        let stray = ['.', ',', '\'', '-'][rng.gen_range(0..4)];
        out.insert(pos, stray);
    } else if chars.len() > 2 {
        out.remove(pos);
    }
    out.into_iter().collect()
}

/// Builds the line plan for one cover page.
///
/// Deliberate ambiguities: a share of titles reuse program vocabulary in
/// title case while some program lines are bare (no "department of"
/// cue), and a mid-page submission date line has exactly the shape of
/// the bottom year line. Both are resolvable from vertical position.
fn draft_document(rng: &mut ChaCha8Rng) -> (Draft, MetadataRecord) {
    let has_letterhead = rng.gen_bool(0.40);
    let has_pre_title = rng.gen_bool(0.30);
    let title_caps = rng.gen_bool(0.45);
    let has_credentials = rng.gen_bool(0.25);
    let program_phrasing = rng.gen_range(0..100u32); // dept / field-of / bare
    let at_the_institution = rng.gen_bool(0.50);
    let has_submission_date = rng.gen_bool(0.30);
    let has_approved_by = rng.gen_bool(0.50);
    let advisor_name_first = rng.gen_bool(0.60);
    let has_copyright = rng.gen_bool(0.15);
    let month_on_year_line = rng.gen_bool(0.70);
    let has_location_footer = rng.gen_bool(0.40);

    let title = title_words(rng);
    let author = person_name(rng);
    let advisor = person_name(rng);
    let degree = pick(rng, &DEGREES).to_string();
    let program = pick(rng, &PROGRAMS).to_string();
    let institution = pick(rng, &INSTITUTIONS).to_string();
    let year = rng.gen_range(1945..=1990u32);

    let mut gt = MetadataRecord::default();
    gt.set(FieldKind::Title, Some(title.join(" ")));
    gt.set(FieldKind::Author, Some(author.clone()));
    gt.set(FieldKind::Degree, Some(degree.clone()));
    gt.set(FieldKind::Program, Some(program.clone()));
    gt.set(FieldKind::Institution, Some(institution.clone()));
    gt.set(FieldKind::Year, Some(year.to_string()));
    gt.set(FieldKind::Advisor, Some(advisor.clone()));

    let mut draft = Draft { lines: Vec::new(), anns: Vec::new() };

    if has_letterhead {
        let casing = if rng.gen_bool(0.5) { Casing::Caps } else { Casing::Title };
        draft.push(line(&words_of(&institution), casing, false, 40));
    }
    if has_pre_title {
        let kind = if rng.gen_bool(0.5) { "dissertation" } else { "thesis" };
        let spec = line(&words_of(&format!("a {kind} presented to")), Casing::Lower, false, 8);
        draft.push(anchored(spec, 0.11, rng));
        if rng.gen_bool(0.5) {
            draft.push(line(
                &words_of("the faculty of the graduate school"),
                Casing::Lower,
                false,
                8,
            ));
        }
    }

    // Title block, wrapped to at most 4 words per line.
    let casing = if title_caps { Casing::Caps } else { Casing::Title };
    let chunks: Vec<&[String]> = title.chunks(4).collect();
    let mut first_pos = None;
    let mut last_pos = None;
    for (ci, chunk) in chunks.iter().enumerate() {
        let mut spec = line(chunk, casing, true, 16);
        if ci == 0 {
            spec = anchored(spec, 0.18, rng);
        }
        let idx = draft.push(spec);
        if first_pos.is_none() {
            first_pos = Some((idx, 0));
        }
        last_pos = Some((idx, chunk.len() - 1));
    }
    draft.anns.push(AnnSpec {
        field: FieldKind::Title,
        start: first_pos.expect("title has words"),
        end: last_pos.expect("title has words"),
    });

    // Author block.
    let spec = line(&words_of("by"), Casing::Lower, false, 16);
    draft.push(anchored(spec, 0.42, rng));
    let author_words = words_of(&author);
    let mut author_line = author_words.clone();
    if has_credentials {
        author_line.push("b.s.".to_string());
    }
    let idx = draft.push(LineSpec {
        printed: {
            let mut printed = apply_casing(&author_words, Casing::Title);
            if has_credentials {
                printed.push("B.S.".to_string());
            }
            printed
        },
        clean: author_line,
        big: false,
        gap_after: 16,
        anchor: None,
    });
    draft.annotate_words(FieldKind::Author, idx, 0, author_words.len() - 1);

    // Submission boilerplate and degree/program/institution block.
    let kind = if rng.gen_bool(0.6) { "dissertation" } else { "thesis" };
    let spec = line(
        &words_of(&format!("a {kind} submitted in partial fulfillment")),
        Casing::Lower,
        false,
        8,
    );
    draft.push(anchored(spec, 0.55, rng));
    draft.push(line(
        &words_of("of the requirements for the degree of"),
        Casing::Lower,
        false,
        8,
    ));
    let idx = draft.push(line(&words_of(&degree), Casing::Title, false, 8));
    let degree_len = words_of(&degree).len();
    draft.annotate_words(FieldKind::Degree, idx, 0, degree_len - 1);

    let program_words = words_of(&program);
    if program_phrasing < 35 {
        let mut all = words_of("department of");
        let offset = all.len();
        all.extend(program_words.iter().cloned());
        let idx = draft.push(line(&all, Casing::Title, false, 8));
        draft.annotate_words(FieldKind::Program, idx, offset, offset + program_words.len() - 1);
    } else if program_phrasing < 65 {
        let mut all = words_of("in the field of");
        let offset = all.len();
        all.extend(program_words.iter().cloned());
        let idx = draft.push(LineSpec {
            printed: {
                let mut printed = words_of("in the field of");
                printed.extend(apply_casing(&program_words, Casing::Title));
                printed
            },
            clean: all,
            big: false,
            gap_after: 8,
            anchor: None,
        });
        draft.annotate_words(FieldKind::Program, idx, offset, offset + program_words.len() - 1);
    } else {
        // Bare program line, as signature pages often print it.
        let idx = draft.push(line(&program_words, Casing::Title, false, 8));
        draft.annotate_words(FieldKind::Program, idx, 0, program_words.len() - 1);
    }

    let institution_words = words_of(&institution);
    if at_the_institution {
        let mut all = words_of("at the");
        let offset = all.len();
        all.extend(institution_words.iter().cloned());
        let idx = draft.push(LineSpec {
            printed: {
                let mut printed = words_of("at the");
                printed.extend(apply_casing(&institution_words, Casing::Title));
                printed
            },
            clean: all,
            big: false,
            gap_after: 16,
            anchor: None,
        });
        draft.annotate_words(
            FieldKind::Institution,
            idx,
            offset,
            offset + institution_words.len() - 1,
        );
    } else {
        let idx = draft.push(line(&institution_words, Casing::Title, false, 16));
        draft.annotate_words(FieldKind::Institution, idx, 0, institution_words.len() - 1);
    }

    // Submission date, textually identical to the bottom year line; only
    // its vertical position tells it apart.
    if has_submission_date {
        let month = pick(rng, &MONTHS);
        let earlier = year - rng.gen_range(1..=2u32);
        let spec = line(&words_of(&format!("{month} {earlier}")), Casing::Title, false, 8);
        draft.push(anchored(spec, 0.65, rng));
    }

    // Advisor block.
    let advisor_anchor = 0.76;
    let mut advisor_block_anchored = false;
    if has_approved_by {
        let spec = line(&words_of("approved by:"), Casing::Lower, false, 12);
        draft.push(anchored(spec, advisor_anchor, rng));
        advisor_block_anchored = true;
    }
    let advisor_words = words_of(&advisor);
    if advisor_name_first {
        let mut spec = line(&advisor_words, Casing::Title, false, 6);
        if !advisor_block_anchored {
            spec = anchored(spec, advisor_anchor, rng);
        }
        let idx = draft.push(spec);
        draft.annotate_words(FieldKind::Advisor, idx, 0, advisor_words.len() - 1);
        draft.push(line(&words_of("dissertation advisor"), Casing::Title, false, 12));
    } else {
        let mut all = words_of("advisor:");
        let offset = all.len();
        all.extend(advisor_words.iter().cloned());
        let mut spec = LineSpec {
            printed: {
                let mut printed = words_of("Advisor:");
                printed.extend(apply_casing(&advisor_words, Casing::Title));
                printed
            },
            clean: all,
            big: false,
            gap_after: 12,
            anchor: None,
        };
        if !advisor_block_anchored {
            spec = anchored(spec, advisor_anchor, rng);
        }
        let idx = draft.push(spec);
        draft.annotate_words(FieldKind::Advisor, idx, offset, offset + advisor_words.len() - 1);
    }

    if has_copyright {
        draft.push(line(
            &words_of(&format!("© copyright by {author}")),
            Casing::Lower,
            false,
            12,
        ));
    }

    // Year line near the page bottom.
    let year_line = if month_on_year_line {
        format!("{} {year}", pick(rng, &MONTHS))
    } else {
        year.to_string()
    };
    let year_words = words_of(&year_line);
    let year_word_index = year_words.len() - 1;
    let spec = line(&year_words, Casing::Title, false, 12);
    let idx = draft.push(anchored(spec, 0.88, rng));
    draft.annotate_words(FieldKind::Year, idx, year_word_index, year_word_index);

    if has_location_footer {
        let location = pick(rng, &LOCATIONS);
        draft.push(line(&words_of(location), Casing::Title, false, 0));
    }

    (draft, gt)
}

/// Renders a draft into page tokens, clean text, and char-offset
/// annotations.
fn render(draft: &Draft, noise: f64, rng: &mut ChaCha8Rng) -> (Page, String, Vec<Annotation>) {
    // Clean text with per-word char offsets.
    let mut clean = String::new();
    let mut offsets: Vec<Vec<(usize, usize)>> = Vec::with_capacity(draft.lines.len());
    let mut cursor = 0usize;
    for (li, spec) in draft.lines.iter().enumerate() {
        if li > 0 {
            clean.push('\n');
            cursor += 1;
        }
        let mut line_offsets = Vec::with_capacity(spec.clean.len());
        for (wi, word) in spec.clean.iter().enumerate() {
            if wi > 0 {
                clean.push(' ');
                cursor += 1;
            }
            let len = word.chars().count();
            line_offsets.push((cursor, cursor + len));
            clean.push_str(word);
            cursor += len;
        }
        offsets.push(line_offsets);
    }

    let annotations: Vec<Annotation> = draft
        .anns
        .iter()
        .map(|a| Annotation {
            field: a.field,
            start: offsets[a.start.0][a.start.1].0,
            end: offsets[a.end.0][a.end.1].1,
        })
        .collect();

    // Page tokens with noise.
    let mut tokens: Vec<Token> = Vec::new();
    let mut char_cursor = 0usize;
    let mut y_top: u32 = 150 + rng.gen_range(0..60);
    for (li, spec) in draft.lines.iter().enumerate() {
        if let Some(anchor) = spec.anchor {
            y_top = y_top.max(anchor);
        }
        let (char_w, line_h) = if spec.big { (22u32, 56u32) } else { (16u32, 44u32) };
        // Corrupt words, possibly splitting one into hyphenated halves.
        let mut printed: Vec<String> = Vec::with_capacity(spec.printed.len());
        for word in &spec.printed {
            let chars = word.chars().count();
            if chars >= 6 && rng.gen_bool(0.04) {
                let cut = rng.gen_range(2..chars - 1);
                let head: String = word.chars().take(cut).collect();
                let tail: String = word.chars().skip(cut).collect();
                printed.push(format!("{head}-"));
                printed.push(tail);
            } else if rng.gen_bool(noise) {
                printed.push(corrupt(word, rng));
            } else {
                printed.push(word.clone());
            }
        }

        let total: u32 = printed.iter().map(|w| w.chars().count() as u32 * char_w).sum::<u32>()
            + char_w * printed.len().saturating_sub(1) as u32;
        let mut x = if total + 200 < PAGE_W { (PAGE_W - total) / 2 } else { 100 };
        for (wi, word) in printed.iter().enumerate() {
            if wi > 0 || li > 0 {
                char_cursor += 1; // separator in the reconstruction
            }
            let w_px = word.chars().count() as u32 * char_w;
            let len = word.chars().count();
            tokens.push(Token {
                text: word.clone(),
                line_index: li,
                word_index: wi,
                bbox: BBox {
                    x1: x,
                    y1: PAGE_H - (y_top + line_h),
                    x2: (x + w_px).min(PAGE_W),
                    y2: PAGE_H - y_top,
                },
                char_start: char_cursor,
                char_end: char_cursor + len,
            });
            char_cursor += len;
            x = (x + w_px + char_w).min(PAGE_W);
        }
        y_top += line_h + spec.gap_after;
    }

    (Page { width: PAGE_W, height: PAGE_H, tokens }, clean, annotations)
}

/// Generates one document. The caller supplies the document index (used
/// for the id) and a seeded generator.
pub fn generate_document(index: usize, noise: f64, rng: &mut ChaCha8Rng) -> SynthDocument {
    let (draft, ground_truth) = draft_document(rng);
    let (page, clean_text, annotations) = render(&draft, noise, rng);
    let hocr = to_hocr(&page);
    SynthDocument {
        doc_id: format!("doc_{index:04}"),
        page,
        hocr,
        clean_text,
        annotations,
        ground_truth,
    }
}

/// Generates the whole corpus in memory, deterministically from the seed.
pub fn generate_corpus(config: &SynthConfig) -> Vec<SynthDocument> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    (0..config.docs).map(|i| generate_document(i, config.noise, &mut rng)).collect()
}

/// Writes a generated corpus in the on-disk layout. `ocr.txt` is omitted
/// deliberately; loaders reconstruct it from the hOCR.
pub fn write_corpus(config: &SynthConfig, root: &Path) -> Result<(), SynthError> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| SynthError::Io { path, source }
    };
    for doc in generate_corpus(config) {
        let dir = root.join(&doc.doc_id);
        std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let hocr_path = dir.join("page.hocr");
        std::fs::write(&hocr_path, &doc.hocr).map_err(io_err(&hocr_path))?;
        let clean_path = dir.join("clean.txt");
        std::fs::write(&clean_path, &doc.clean_text).map_err(io_err(&clean_path))?;
        let ann_path = dir.join("annotations.json");
        let anns = serde_json::to_string_pretty(&doc.annotations).expect("serializable");
        std::fs::write(&ann_path, anns).map_err(io_err(&ann_path))?;
        let gt_path = dir.join("gt.json");
        let gt = serde_json::to_string_pretty(&doc.ground_truth).expect("serializable");
        std::fs::write(&gt_path, gt).map_err(io_err(&gt_path))?;
    }
    Ok(())
}
