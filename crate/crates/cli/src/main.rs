mod config;

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

use creditseg::classifier::{load_model, save_model, ScorerModel, TrainConfig};
use creditseg::corpus::io::{
    read_corpus, read_raw_corpus, read_vocabulary, write_corpus, write_synthetic, write_vocabulary,
    CorpusFile,
};
use creditseg::corpus::{
    build_vocabulary, class_names, preprocess_corpus, synthesize_test_set, Document, TokenDocument,
    Vocabulary, MAX_SENTENCE_WORDS, MIN_SENTENCE_WORDS,
};
use creditseg::metrics::{segmentation_report, LabeledSegment};
use creditseg::pipeline::{
    classification_report, parse_predictions, predict_corpus, train_seg_noisy,
    train_seg_refine, write_predictions, CandidateMode, PipelineConfig, PredictionRecord,
};
use creditseg::segmenter::{build_score_table, write_segmentation};
use creditseg::stopwords;

use config::{ConfigFile, Resolver};

#[derive(Parser)]
#[command(name = "creditseg", version, about = "Segment multilabel documents into labeled spans")]
struct Cli {
    /// Flat `key = value` file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tokenize, stem and prune a raw corpus; writes the corpus and vocabulary.
    Preprocess(PreprocessArgs),
    /// Build a synthetic multilabel test set by concatenating single-label documents.
    Synthesize(SynthesizeArgs),
    /// Train a scorer with SEG-NOISY or SEG-REFINE.
    Train(TrainArgs),
    /// Segment every document of a corpus with a trained scorer.
    Segment(SegmentArgs),
    /// Score a prediction dump against ground truth.
    Evaluate(EvaluateArgs),
}

#[derive(Args)]
struct PreprocessArgs {
    /// Raw corpus, one `id<TAB>labels<TAB>text` record per line.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Preprocessed corpus output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Vocabulary output.
    #[arg(long)]
    vocab_out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthesizeArgs {
    /// Corpus whose single-label documents are concatenated.
    #[arg(long)]
    singles: Option<PathBuf>,
    /// Corpus whose label sets decide which combinations are admissible.
    #[arg(long)]
    multis: Option<PathBuf>,
    /// Number of documents to build.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// seg-noisy or seg-refine.
    #[arg(long)]
    method: Option<String>,
    /// Segment penalty used while refining.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Refinement rounds (seg-refine only).
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    dropout: Option<f64>,
    #[arg(long)]
    lr_initial: Option<f64>,
    #[arg(long)]
    lr_finetune: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Model file output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SegmentArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// all (every class) or doc-labels (each document's own labels).
    #[arg(long)]
    candidates: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Segmentation listing; standard output if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the per-document prediction dump read by `evaluate`.
    #[arg(long)]
    predictions: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Prediction dump written by `segment --predictions`.
    #[arg(long)]
    predictions: Option<PathBuf>,
    /// Corpus with ground truth; segmentation needs a synthetic set file.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// segmentation or classification.
    #[arg(long)]
    task: Option<String>,
    /// Append per-document rows to the report.
    #[arg(long)]
    per_document: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let result = ConfigFile::load(cli.config.as_deref()).and_then(|cfg| match cli.command {
        Command::Preprocess(a) => preprocess(a, &cfg),
        Command::Synthesize(a) => synthesize(a, &cfg),
        Command::Train(a) => train(a, &cfg),
        Command::Segment(a) => segment(a, &cfg),
        Command::Evaluate(a) => evaluate(a, &cfg),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

/// A file if given, else standard output.
fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn preprocess(a: PreprocessArgs, cfg: &ConfigFile) -> Result<()> {
    let mut r = Resolver::new(cfg);
    let input = r.existing("input", a.input);
    let out = r.path("out", a.out);
    let vocab_out = r.path("vocab-out", a.vocab_out);
    r.finish()?;

    let raw = read_raw_corpus(&input)?;
    let (docs, stats) = preprocess_corpus(&raw, stopwords::english());
    let vocab = build_vocabulary(&docs)?;
    let pruned: Vec<TokenDocument> = docs.iter().map(|d| vocab.prune(d)).collect();
    let count = |ds: &[TokenDocument]| -> usize {
        ds.iter().flat_map(|d| &d.sentences).map(Vec::len).sum()
    };
    let (tokens_in, tokens_kept) = (count(&docs), count(&pruned));

    let hash = vocab.content_hash();
    let mut w = create(&out)?;
    write_corpus(&mut w, &pruned, Some(&hash))?;
    w.flush()?;
    let mut w = create(&vocab_out)?;
    write_vocabulary(&mut w, &vocab)?;
    w.flush()?;

    eprintln!(
        "documents: {} read, {} kept; sentences: {} read, {} kept, {} dropped by the \
         {MIN_SENTENCE_WORDS}-{MAX_SENTENCE_WORDS} word rule; tokens: {tokens_in} kept after \
         stop-word removal, {} dropped as rare, {tokens_kept} remain; vocabulary: {} types",
        stats.documents_in,
        stats.documents_kept,
        stats.sentences_in,
        stats.sentences_kept,
        stats.sentences_dropped_length,
        tokens_in - tokens_kept,
        vocab.len()
    );
    Ok(())
}

fn synthesize(a: SynthesizeArgs, cfg: &ConfigFile) -> Result<()> {
    let mut r = Resolver::new(cfg);
    let singles = r.existing("singles", a.singles);
    let multis = r.existing("multis", a.multis);
    let n = r.value("n", a.n, 50);
    let seed = r.value("seed", a.seed, 0);
    let out = r.optional("out", a.out);
    r.finish()?;

    let singles = read_corpus(&singles)?;
    let multis = read_corpus(&multis)?;
    if let (Some(a), Some(b)) = (&singles.vocab_hash, &multis.vocab_hash) {
        if a != b {
            bail!("singles and multis were preprocessed with different vocabularies");
        }
    }
    let built = synthesize_test_set(&singles.documents, &multis.documents, n, seed)?;
    let rows: Vec<_> = built.into_iter().map(|s| (s.document, s.truth)).collect();
    let mut w = output(out.as_deref())?;
    write_synthetic(&mut w, &rows, singles.vocab_hash.as_deref())?;
    w.flush()?;
    info!("wrote {} synthetic documents", rows.len());
    Ok(())
}

/// Loads the vocabulary and checks it against the corpus hash, if any.
fn compatible_vocab(vocab_path: &Path, corpus: &CorpusFile, model: Option<&ScorerModel>) -> Result<Vocabulary> {
    let vocab = read_vocabulary(vocab_path)?;
    let hash = vocab.content_hash();
    let corpus_ok = corpus.vocab_hash.as_ref().is_none_or(|h| *h == hash);
    let model_ok = model.is_none_or(|m| m.vocab_hash().is_empty() || m.vocab_hash() == hash);
    if !corpus_ok || !model_ok {
        bail!("model/corpus vocabulary mismatch");
    }
    if let Some(m) = model {
        if m.vocab_size() != vocab.len() {
            bail!("model/corpus vocabulary mismatch");
        }
    }
    Ok(vocab)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Method {
    Noisy,
    Refine,
}

fn train(a: TrainArgs, cfg: &ConfigFile) -> Result<()> {
    let mut r = Resolver::new(cfg);
    let corpus_path = r.existing("corpus", a.corpus);
    let vocab_path = r.existing("vocab", a.vocab);
    let out = r.path("out", a.out);
    let method = match r.value("method", a.method, "seg-noisy".to_string()).as_str() {
        "seg-noisy" => Method::Noisy,
        "seg-refine" => Method::Refine,
        other => {
            r.problem(format!("method must be seg-noisy or seg-refine, got `{other}`"));
            Method::Noisy
        }
    };
    let d = TrainConfig::default();
    let seed = r.value("seed", a.seed, 0);
    let train_cfg = TrainConfig {
        hidden: r.value("hidden", a.hidden, d.hidden),
        dropout: r.value("dropout", a.dropout, d.dropout),
        epochs: r.value("epochs", a.epochs, d.epochs),
        lr_initial: r.value("lr-initial", a.lr_initial, d.lr_initial),
        lr_finetune: r.value("lr-finetune", a.lr_finetune, d.lr_finetune),
        batch_size: r.value("batch-size", a.batch_size, d.batch_size),
        rng_seed: seed,
        ..d
    };
    for p in train_cfg.problems() {
        r.problem(p);
    }
    let alpha = r.value("alpha", a.alpha, 0.3);
    if !alpha.is_finite() || alpha < 0.0 {
        r.problem(format!("alpha must be finite and >= 0, got {alpha}"));
    }
    let iterations = r.value("iterations", a.iterations, 3);
    r.finish()?;

    let corpus = read_corpus(&corpus_path)?;
    let vocab = compatible_vocab(&vocab_path, &corpus, None)?;
    let docs: Vec<Document> = corpus.documents.iter().map(|d| vocab.encode(d)).collect();
    let classes = class_names(&docs);
    let pipeline = PipelineConfig {
        train: train_cfg,
        alpha_noisy: alpha,
        alpha_refine: alpha,
        refinement_iterations: iterations,
        rng_seed: seed,
    };
    info!(
        "training {:?} on {} documents, {} classes, vocabulary {}",
        method,
        docs.len(),
        classes.len(),
        vocab.len()
    );
    let mut model = match method {
        Method::Noisy => {
            let (model, report) = train_seg_noisy(&docs, &classes, vocab.len(), &pipeline)?;
            log_losses("initial", &report.epoch_losses);
            model
        }
        Method::Refine => {
            let outcome = train_seg_refine(&docs, &classes, vocab.len(), &pipeline)?;
            log_losses("initial", &outcome.initial.epoch_losses);
            for (k, it) in outcome.iterations.iter().enumerate() {
                info!(
                    "fine-tune {}: {} labeled segments, {} null segments",
                    k + 1,
                    it.segments.len(),
                    it.null_segments
                );
                if let Some(rep) = &it.report {
                    log_losses(&format!("fine-tune {}", k + 1), &rep.epoch_losses);
                }
            }
            outcome.model
        }
    };
    model.set_vocab_hash(vocab.content_hash());
    save_model(&out, &model)?;
    info!("model written to {}", out.display());
    Ok(())
}

fn log_losses(phase: &str, losses: &[f64]) {
    for (e, l) in losses.iter().enumerate() {
        log::debug!("{phase} epoch {}: loss {l:.6}", e + 1);
    }
    if let Some(last) = losses.last() {
        info!("{phase}: {} epochs, final loss {last:.6}", losses.len());
    }
}

fn segment(a: SegmentArgs, cfg: &ConfigFile) -> Result<()> {
    let mut r = Resolver::new(cfg);
    let model_path = r.existing("model", a.model);
    let corpus_path = r.existing("corpus", a.corpus);
    let vocab_path = r.existing("vocab", a.vocab);
    let mode = match r.value("candidates", a.candidates, "all".to_string()).as_str() {
        "all" => CandidateMode::All,
        "doc-labels" => CandidateMode::DocumentLabels,
        other => {
            r.problem(format!("candidates must be all or doc-labels, got `{other}`"));
            CandidateMode::All
        }
    };
    let alpha = r.value("alpha", a.alpha, 0.3);
    if !alpha.is_finite() || alpha < 0.0 {
        r.problem(format!("alpha must be finite and >= 0, got {alpha}"));
    }
    let out = r.optional("out", a.out);
    let predictions = r.optional("predictions", a.predictions);
    r.finish()?;

    let model = load_model(&model_path)?;
    let corpus = read_corpus(&corpus_path)?;
    let vocab = compatible_vocab(&vocab_path, &corpus, Some(&model))?;
    let docs: Vec<Document> = corpus.documents.iter().map(|d| vocab.encode(d)).collect();
    let preds = predict_corpus(&model, &docs, mode, alpha)?;

    let mut w = output(out.as_deref())?;
    for (doc, p) in docs.iter().zip(&preds) {
        writeln!(w, "# {}", doc.id)?;
        let table = build_score_table(&model, doc)?;
        write_segmentation(&mut w, &p.segmentation, &table, |l| {
            model.label_name(l).unwrap_or("null").to_string()
        })?;
    }
    w.flush()?;
    if let Some(path) = predictions {
        let records: Vec<PredictionRecord> = docs
            .iter()
            .zip(&preds)
            .map(|(d, p)| PredictionRecord::new(&model, &d.id, p))
            .collect();
        let mut w = create(&path)?;
        write_predictions(&mut w, &records)?;
        w.flush()?;
    }
    info!("segmented {} documents", docs.len());
    Ok(())
}

fn evaluate(a: EvaluateArgs, cfg: &ConfigFile) -> Result<()> {
    let mut r = Resolver::new(cfg);
    let pred_path = r.existing("predictions", a.predictions);
    let truth_path = r.existing("truth", a.truth);
    let task = r.value("task", a.task, "segmentation".to_string());
    if task != "segmentation" && task != "classification" {
        r.problem(format!("task must be segmentation or classification, got `{task}`"));
    }
    let per_document = a.per_document || r.value("per-document", None, false);
    let out = r.optional("out", a.out);
    r.finish()?;

    let text = std::fs::read_to_string(&pred_path)
        .with_context(|| format!("cannot read {}", pred_path.display()))?;
    let records = parse_predictions(&text)
        .map_err(|(line, m)| anyhow!("{}:{line}: {m}", pred_path.display()))?;
    let truth = read_corpus(&truth_path)?;

    let mut by_id: HashMap<&str, &PredictionRecord> = HashMap::new();
    for rec in &records {
        if by_id.insert(&rec.doc_id, rec).is_some() {
            bail!("duplicate prediction for document id `{}`", rec.doc_id);
        }
    }
    let truth_ids: BTreeSet<&str> = truth.documents.iter().map(|d| d.id.as_str()).collect();
    if let Some(extra) = records.iter().find(|r| !truth_ids.contains(r.doc_id.as_str())) {
        bail!("id mismatch: prediction for unknown document id `{}`", extra.doc_id);
    }
    let mut aligned = Vec::with_capacity(truth.documents.len());
    for doc in &truth.documents {
        let rec = by_id
            .get(doc.id.as_str())
            .ok_or_else(|| anyhow!("id mismatch: no prediction for document id `{}`", doc.id))?;
        aligned.push(*rec);
    }

    let report = if task == "segmentation" {
        let mut rows = Vec::with_capacity(aligned.len());
        for ((doc, t), rec) in truth.documents.iter().zip(&truth.truths).zip(&aligned) {
            let t = t
                .as_ref()
                .ok_or_else(|| anyhow!("document `{}` has no ground-truth segmentation", doc.id))?;
            let predicted: Vec<LabeledSegment<String>> = rec.segmentation.segments();
            if predicted.last().map(|s| s.end) != Some(doc.len()) {
                bail!(
                    "prediction for `{}` covers {} sentences, document has {}",
                    doc.id,
                    predicted.last().map_or(0, |s| s.end),
                    doc.len()
                );
            }
            rows.push((doc.id.clone(), t.segments(), predicted));
        }
        segmentation_report(&rows)?
    } else {
        let classes: Vec<String> = aligned
            .first()
            .map(|r| r.scores.iter().map(|(c, _)| c.clone()).collect())
            .unwrap_or_default();
        let mut scores = Vec::with_capacity(aligned.len());
        for rec in &aligned {
            let lookup: HashMap<&str, f64> = rec.scores.iter().map(|(c, s)| (c.as_str(), *s)).collect();
            let row = classes
                .iter()
                .map(|c| {
                    lookup
                        .get(c.as_str())
                        .copied()
                        .ok_or_else(|| anyhow!("document `{}` lacks a score for class `{c}`", rec.doc_id))
                })
                .collect::<Result<Vec<f64>>>()?;
            scores.push(row);
        }
        let ids: Vec<String> = truth.documents.iter().map(|d| d.id.clone()).collect();
        let predicted: Vec<BTreeSet<String>> = aligned.iter().map(|r| r.labels.clone()).collect();
        let observed: Vec<BTreeSet<String>> = truth.documents.iter().map(|d| d.labels.clone()).collect();
        classification_report(&ids, &predicted, &scores, &observed, &classes)?
    };
    let mut w = output(out.as_deref())?;
    w.write_all(report.to_text(per_document).as_bytes())?;
    w.flush()?;
    Ok(())
}
