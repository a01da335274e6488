use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use etdtag::config::Config;
use etdtag::corpus::{load_corpus, split_corpus, Document, MetadataRecord};
use etdtag::crf::{BioConstraint, CrfModel};
use etdtag::eval::{compare_models, evaluate, EvalReport, SimilarityNorm};
use etdtag::features::LexiconTagger;
use etdtag::heuristic::{extract_heuristic, HeuristicRules};
use etdtag::hocr::parse_hocr_with_warnings;
use etdtag::pipeline::{
    conll_rows, evaluate_model, prepare_document, tag_document, train_model, AlignedDocument,
};
use etdtag::synth::{write_corpus, SynthConfig};

use crate::{Cli, Command, SimilarityArg, SplitArg};

/// A record paired with its document id, the payload of prediction files.
#[derive(Debug, Serialize, Deserialize)]
struct PredRecord {
    doc_id: String,
    #[serde(flatten)]
    record: MetadataRecord,
}

pub(crate) fn run(cli: Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(path) => Config::from_path(path)?,
        None => Config::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }

    match cli.command {
        Command::Synth { out, docs, noise } => synth(&config, &out, docs, noise),
        Command::Ingest { corpus, force } => ingest(&corpus, force),
        Command::Align { corpus, out } => align(&corpus, out.as_deref()),
        Command::Featurize { corpus, out, visual } => {
            featurize(&config, &corpus, &out, visual)
        }
        Command::Train { corpus, model_out, visual, l2, epochs, batch, rate, fraction, split } => {
            apply_train_overrides(&mut config, visual, l2, epochs, batch, rate, fraction);
            train(&config, &corpus, &model_out, split)
        }
        Command::Tag { corpus, model, out, split, fraction, strict_bio } => {
            if let Some(f) = fraction {
                config.train_fraction = f;
            }
            config.strict_bio |= strict_bio;
            tag(&config, &corpus, &model, &out, split)
        }
        Command::Eval {
            corpus,
            pred,
            model,
            threshold,
            similarity,
            split,
            fraction,
            report,
            strict_bio,
        } => {
            if let Some(t) = threshold {
                config.threshold = t;
            }
            if let Some(s) = similarity {
                config.similarity = match s {
                    SimilarityArg::Ratio => SimilarityNorm::Ratio,
                    SimilarityArg::MaxLen => SimilarityNorm::MaxLen,
                };
            }
            if let Some(f) = fraction {
                config.train_fraction = f;
            }
            config.strict_bio |= strict_bio;
            eval(&config, &corpus, pred.as_deref(), model.as_deref(), split, report.as_deref())
        }
        Command::Baseline { corpus, out, rules, split, fraction } => {
            if let Some(f) = fraction {
                config.train_fraction = f;
            }
            baseline(&config, &corpus, &out, rules.as_deref(), split)
        }
        Command::Compare { reports, out } => compare(&reports, out.as_deref()),
    }
}

#[allow(clippy::too_many_arguments)]
fn apply_train_overrides(
    config: &mut Config,
    visual: bool,
    l2: Option<f64>,
    epochs: Option<usize>,
    batch: Option<usize>,
    rate: Option<f64>,
    fraction: Option<f64>,
) {
    config.visual |= visual;
    if let Some(v) = l2 {
        config.l2 = v;
    }
    if let Some(v) = epochs {
        config.epochs = v;
    }
    if let Some(v) = batch {
        config.batch_size = v;
    }
    if let Some(v) = rate {
        config.learning_rate = v;
    }
    if let Some(v) = fraction {
        config.train_fraction = v;
    }
}

fn load_docs(corpus: &Path) -> Result<Vec<Document>> {
    let outcome = load_corpus(corpus)
        .with_context(|| format!("cannot read corpus at {}", corpus.display()))?;
    for err in &outcome.errors {
        eprintln!("warning: skipping document {err}");
    }
    if outcome.documents.is_empty() {
        bail!("no loadable documents under {}", corpus.display());
    }
    Ok(outcome.documents)
}

fn select_split(
    docs: Vec<Document>,
    split: SplitArg,
    fraction: f64,
    seed: u64,
) -> Result<Vec<Document>> {
    let mut chosen = match split {
        SplitArg::All => docs,
        _ => {
            let (train, test) = split_corpus(docs, fraction, seed)?;
            match split {
                SplitArg::Train => train,
                SplitArg::Test => test,
                SplitArg::All => unreachable!(),
            }
        }
    };
    chosen.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    Ok(chosen)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

fn synth(config: &Config, out: &Path, docs: Option<usize>, noise: Option<f64>) -> Result<()> {
    let synth = SynthConfig {
        docs: docs.unwrap_or(config.synth_docs),
        seed: config.seed,
        noise: noise.unwrap_or(config.synth_noise),
    };
    write_corpus(&synth, out)?;
    println!("wrote {} synthetic documents to {}", synth.docs, out.display());
    Ok(())
}

fn ingest(corpus: &Path, force: bool) -> Result<()> {
    let entries = fs::read_dir(corpus)
        .with_context(|| format!("cannot read corpus at {}", corpus.display()))?;
    let mut dirs: Vec<PathBuf> =
        entries.filter_map(|e| e.ok()).map(|e| e.path()).filter(|p| p.is_dir()).collect();
    dirs.sort();
    if dirs.is_empty() {
        bail!("no document directories under {}", corpus.display());
    }
    let (mut written, mut kept, mut failed) = (0usize, 0usize, 0usize);
    for dir in dirs {
        let doc_id = dir.file_name().unwrap_or_default().to_string_lossy().into_owned();
        let hocr_path = dir.join("page.hocr");
        let content = match fs::read_to_string(&hocr_path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("warning: {doc_id}: cannot read page.hocr: {e}");
                failed += 1;
                continue;
            }
        };
        match parse_hocr_with_warnings(&content) {
            Ok((page, warnings)) => {
                for w in warnings {
                    eprintln!("warning: {doc_id}: {w}");
                }
                let ocr_path = dir.join("ocr.txt");
                if force || !ocr_path.exists() {
                    write_text(&ocr_path, &page.text())?;
                    written += 1;
                } else {
                    kept += 1;
                }
            }
            Err(e) => {
                eprintln!("warning: {doc_id}: {e}");
                failed += 1;
            }
        }
    }
    println!("ingest: {written} ocr.txt written, {kept} kept, {failed} failed");
    if written + kept == 0 {
        bail!("every document failed to ingest");
    }
    Ok(())
}

fn align(corpus: &Path, out: Option<&Path>) -> Result<()> {
    let docs = load_docs(corpus)?;
    if let Some(dir) = out {
        fs::create_dir_all(dir)
            .with_context(|| format!("cannot create {}", dir.display()))?;
    }
    let mut count = 0usize;
    for doc in &docs {
        let prep = prepare_document(doc, &LexiconTagger)?;
        let sidecar = AlignedDocument::from_prepared(&prep);
        let path = match out {
            Some(dir) => dir.join(format!("{}.json", doc.doc_id)),
            None => corpus.join(&doc.doc_id).join("aligned.json"),
        };
        write_json(&path, &sidecar)?;
        count += 1;
    }
    println!("aligned {count} documents");
    Ok(())
}

fn featurize(config: &Config, corpus: &Path, out: &Path, visual: bool) -> Result<()> {
    let docs = load_docs(corpus)?;
    let visual = visual || config.visual;
    let mut blocks = Vec::with_capacity(docs.len());
    for doc in &docs {
        let prep = prepare_document(doc, &LexiconTagger)?;
        blocks.push(conll_rows(&prep, visual));
    }
    write_text(out, &blocks.join("\n"))?;
    println!("featurized {} documents into {}", docs.len(), out.display());
    Ok(())
}

fn train(config: &Config, corpus: &Path, model_out: &Path, split: SplitArg) -> Result<()> {
    let docs = load_docs(corpus)?;
    let docs = select_split(docs, split, config.train_fraction, config.seed)?;
    let mut model = train_model(&docs, config.visual, config.hyperparams())?;
    model.set_config_hash(Some(config.hash()));
    model.save(model_out)?;
    println!(
        "trained on {} documents: {} ({} visual), config {}",
        docs.len(),
        model,
        if config.visual { "with" } else { "without" },
        &config.hash()[..12],
    );
    Ok(())
}

fn decode_constraint(config: &Config) -> BioConstraint {
    if config.strict_bio {
        BioConstraint::Strict
    } else {
        BioConstraint::Off
    }
}

fn tag(config: &Config, corpus: &Path, model: &Path, out: &Path, split: SplitArg) -> Result<()> {
    let model = CrfModel::load(model)?;
    let docs = load_docs(corpus)?;
    let docs = select_split(docs, split, config.train_fraction, config.seed)?;
    let constraint = decode_constraint(config);
    let mut records = Vec::with_capacity(docs.len());
    for doc in &docs {
        let prep = prepare_document(doc, &LexiconTagger)?;
        let (_, record) = tag_document(&model, &prep, constraint)?;
        records.push(PredRecord { doc_id: doc.doc_id.clone(), record });
    }
    write_json(out, &records)?;
    println!("tagged {} documents into {}", records.len(), out.display());
    Ok(())
}

fn eval(
    config: &Config,
    corpus: &Path,
    pred: Option<&Path>,
    model: Option<&Path>,
    split: SplitArg,
    report_path: Option<&Path>,
) -> Result<()> {
    let docs = load_docs(corpus)?;
    let docs = select_split(docs, split, config.train_fraction, config.seed)?;

    let mut report = match (pred, model) {
        (Some(pred_path), None) => {
            let text = fs::read_to_string(pred_path)
                .with_context(|| format!("cannot read predictions {}", pred_path.display()))?;
            let records: Vec<PredRecord> = serde_json::from_str(&text)
                .with_context(|| format!("malformed predictions in {}", pred_path.display()))?;
            let by_id: BTreeMap<&str, &MetadataRecord> =
                records.iter().map(|r| (r.doc_id.as_str(), &r.record)).collect();

            let mut predictions = Vec::new();
            let mut gold = Vec::new();
            for doc in &docs {
                let Some(gt) = doc.ground_truth.clone() else { continue };
                let Some(&record) = by_id.get(doc.doc_id.as_str()) else {
                    bail!("predictions are missing document {}", doc.doc_id);
                };
                predictions.push(record.clone());
                gold.push(gt);
            }
            if gold.is_empty() {
                bail!("no documents with ground truth in the selected split");
            }
            let extra = records.len() - predictions.len();
            if extra > 0 {
                eprintln!("note: {extra} prediction(s) not in the selected split were ignored");
            }
            evaluate(&predictions, &gold, config.threshold, config.similarity)?
        }
        (None, Some(model_path)) => {
            let model = CrfModel::load(model_path)?;
            evaluate_model(
                &model,
                &docs,
                config.threshold,
                config.similarity,
                decode_constraint(config),
            )?
        }
        _ => bail!("pass exactly one of --pred or --model"),
    };

    report.config_hash = Some(config.hash());
    print!("{}", report.to_text_table());
    if let Some(path) = report_path {
        write_json(path, &report)?;
        println!("report written to {}", path.display());
    }
    Ok(())
}

fn baseline(
    config: &Config,
    corpus: &Path,
    out: &Path,
    rules: Option<&Path>,
    split: SplitArg,
) -> Result<()> {
    let rules = match rules {
        Some(path) => HeuristicRules::from_path(path)?,
        None => HeuristicRules::default(),
    };
    let docs = load_docs(corpus)?;
    let docs = select_split(docs, split, config.train_fraction, config.seed)?;
    let records: Vec<PredRecord> = docs
        .iter()
        .map(|doc| PredRecord {
            doc_id: doc.doc_id.clone(),
            record: extract_heuristic(&doc.clean_text, &rules),
        })
        .collect();
    write_json(out, &records)?;
    println!("baseline tagged {} documents into {}", records.len(), out.display());
    Ok(())
}

fn compare(reports: &[String], out: Option<&Path>) -> Result<()> {
    let mut named = Vec::new();
    for spec in reports {
        let Some((name, path)) = spec.split_once('=') else {
            bail!("--report expects name=path, got {spec:?}");
        };
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read report {path}"))?;
        let report: EvalReport = serde_json::from_str(&text)
            .with_context(|| format!("malformed report in {path}"))?;
        named.push((name.to_string(), report));
    }
    let comparison = compare_models(&named);
    print!("{}", comparison.to_text_table());
    if let Some(path) = out {
        write_json(path, &comparison)?;
        println!("comparison written to {}", path.display());
    }
    Ok(())
}
