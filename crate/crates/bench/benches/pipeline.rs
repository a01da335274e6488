use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use etdtag::align::{align, edit_distance, project_tokens};
use etdtag::crf::{BioConstraint, LabeledSequence};
use etdtag::features::LexiconTagger;
use etdtag::hocr::parse_hocr;
use etdtag::pipeline::{feature_maps, prepare_document};

fn benches(c: &mut Criterion) {
    let fx = etdtag_bench::fixture(24, 5);
    let doc = &fx.documents[0];
    let prep = &fx.prepared[0];
    let hocr = std::fs::read_to_string(&doc.hocr_path).unwrap();
    let page = parse_hocr(&hocr).unwrap();
    let ocr_text = page.text();
    let map = align(&ocr_text, &doc.clean_text);

    c.bench_function("hocr/parse_page", |b| {
        b.iter(|| parse_hocr(black_box(&hocr)).unwrap())
    });

    c.bench_function("align/edit_distance", |b| {
        b.iter(|| edit_distance(black_box(&ocr_text), black_box(&doc.clean_text)))
    });

    c.bench_function("align/align_with_traceback", |b| {
        b.iter(|| align(black_box(&ocr_text), black_box(&doc.clean_text)))
    });

    c.bench_function("align/project_tokens", |b| {
        b.iter(|| project_tokens(black_box(&page), black_box(&map), black_box(&doc.clean_text)).unwrap())
    });

    c.bench_function("pipeline/prepare_document", |b| {
        b.iter(|| prepare_document(black_box(doc), &LexiconTagger).unwrap())
    });

    let maps = feature_maps(prep, true);
    c.bench_function("crf/viterbi_15_labels", |b| {
        b.iter(|| fx.model.viterbi(black_box(&maps), BioConstraint::Off).unwrap())
    });

    let seq = LabeledSequence::new(maps.clone(), prep.gold_labels.clone()).unwrap();
    c.bench_function("crf/gradient", |b| {
        b.iter(|| fx.model.gradient(black_box(&seq)).unwrap())
    });

    c.bench_function("crf/log_likelihood", |b| {
        b.iter(|| fx.model.sequence_log_likelihood(black_box(&seq)).unwrap())
    });
}

criterion_group!(pipeline, benches);
criterion_main!(pipeline);
