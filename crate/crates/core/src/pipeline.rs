//! Training regimes and corpus-level prediction/evaluation.
//!
//! SEG-NOISY pairs every document with each of its labels and trains the
//! scorer once. SEG-REFINE starts from that model, then repeatedly segments
//! the training documents against their own labels (plus the null label),
//! and fine-tunes on the resulting non-null segments.

use std::collections::BTreeSet;
use std::io::Write;

use log::{info, warn};
use rayon::prelude::*;

use crate::classifier::{fine_tune, train, ScorerModel, TrainConfig, TrainReport, TrainingExample};
use crate::corpus::{Document, PrefixSums, TrueSegmentation};
use crate::error::{Error, Result};
use crate::metrics::{auc, document_f1, f1_mean, segmentation_report, AucMode, EvalReport, LabeledSegment};
use crate::segmenter::{build_score_table, dp_segment, DpConfig, Segmentation};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub train: TrainConfig,
    /// Segment penalty used with SEG-NOISY models.
    pub alpha_noisy: f64,
    /// Segment penalty used for SEG-REFINE training and its predictions.
    pub alpha_refine: f64,
    pub refinement_iterations: usize,
    pub rng_seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            train: TrainConfig::default(),
            alpha_noisy: 0.3,
            alpha_refine: 0.55,
            refinement_iterations: 3,
            rng_seed: 0,
        }
    }
}

impl PipelineConfig {
    fn train_config(&self, phase: u64) -> TrainConfig {
        TrainConfig {
            rng_seed: self.rng_seed.wrapping_add(phase),
            ..self.train.clone()
        }
    }
}

/// A refinement-phase training segment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefineSegment {
    /// Index into the training corpus.
    pub doc: usize,
    pub start: usize,
    pub end: usize,
    pub label: usize,
}

#[derive(Debug, Clone, Default)]
pub struct RefineIteration {
    /// Non-null segments used as fine-tuning examples, in document order.
    pub segments: Vec<RefineSegment>,
    pub null_segments: usize,
    /// `None` when the iteration produced no usable segments.
    pub report: Option<TrainReport>,
}

#[derive(Debug, Clone)]
pub struct RefineOutcome {
    pub model: ScorerModel,
    pub initial: TrainReport,
    pub iterations: Vec<RefineIteration>,
}

fn label_indices(model: &ScorerModel, doc: &Document) -> Result<Vec<usize>> {
    if doc.labels.is_empty() {
        return Err(Error::Unlabeled(doc.id.clone()));
    }
    doc.labels
        .iter()
        .map(|l| {
            model
                .class_index(l)
                .ok_or_else(|| Error::UnknownClass(l.clone()))
        })
        .collect()
}

/// One example per (document, label) pair over whole-document features.
pub fn document_examples(model: &ScorerModel, docs: &[Document]) -> Result<Vec<TrainingExample>> {
    let mut out = Vec::new();
    for doc in docs {
        let labels = label_indices(model, doc)?;
        let features = PrefixSums::new(doc, model.vocab_size())?.bow(1, doc.len())?;
        out.extend(
            labels
                .into_iter()
                .map(|l| TrainingExample::new(features.clone(), l)),
        );
    }
    Ok(out)
}

fn fresh_model(classes: &[String], vocab_size: usize, cfg: &PipelineConfig) -> Result<ScorerModel> {
    ScorerModel::init(vocab_size, classes.to_vec(), cfg.train.hidden, cfg.rng_seed)
}

/// Trains a scorer on the noisy document-level examples.
pub fn train_seg_noisy(
    docs: &[Document],
    classes: &[String],
    vocab_size: usize,
    cfg: &PipelineConfig,
) -> Result<(ScorerModel, TrainReport)> {
    if docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let model = fresh_model(classes, vocab_size, cfg)?;
    let examples = document_examples(&model, docs)?;
    info!(
        "seg-noisy: {} examples from {} documents",
        examples.len(),
        docs.len()
    );
    let trained = train(model, &examples, &cfg.train_config(0), cfg.train.lr_initial)?;
    Ok((trained.model, trained.report))
}

/// Segments every training document against its own labels plus null and
/// returns the non-null segments and the null segment count.
pub fn refinement_segments(
    model: &ScorerModel,
    docs: &[Document],
    alpha: f64,
) -> Result<(Vec<RefineSegment>, usize)> {
    let dp = DpConfig {
        alpha,
        include_null: true,
        max_segment_len: None,
    };
    let per_doc: Vec<Result<Segmentation>> = docs
        .par_iter()
        .map(|doc| {
            let candidates = label_indices(model, doc)?;
            let table = build_score_table(model, doc)?;
            dp_segment(&table, &candidates, &dp)
        })
        .collect();
    let mut segments = Vec::new();
    let mut nulls = 0;
    for (d, seg) in per_doc.into_iter().enumerate() {
        for (start, end, label) in seg?.segments() {
            if label == model.null_index() {
                nulls += 1;
            } else {
                segments.push(RefineSegment {
                    doc: d,
                    start,
                    end,
                    label,
                });
            }
        }
    }
    Ok((segments, nulls))
}

/// SEG-NOISY followed by `refinement_iterations` rounds of
/// segment-then-fine-tune. Each round fine-tunes on that round's segments only.
pub fn train_seg_refine(
    docs: &[Document],
    classes: &[String],
    vocab_size: usize,
    cfg: &PipelineConfig,
) -> Result<RefineOutcome> {
    let (mut model, initial) = train_seg_noisy(docs, classes, vocab_size, cfg)?;
    let prefixes = docs
        .iter()
        .map(|d| PrefixSums::new(d, vocab_size))
        .collect::<Result<Vec<_>>>()?;
    let mut iterations = Vec::with_capacity(cfg.refinement_iterations);
    for it in 1..=cfg.refinement_iterations {
        let (segments, null_segments) = refinement_segments(&model, docs, cfg.alpha_refine)?;
        info!(
            "seg-refine iteration {it}: {} labeled segments, {null_segments} null segments",
            segments.len()
        );
        let mut record = RefineIteration {
            segments,
            null_segments,
            report: None,
        };
        if record.segments.is_empty() {
            warn!("seg-refine iteration {it}: no non-null segments, skipping fine-tune");
        } else {
            let examples = record
                .segments
                .iter()
                .map(|s| {
                    Ok(TrainingExample::new(
                        prefixes[s.doc].bow(s.start, s.end)?,
                        s.label,
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            let tuned = fine_tune(model, &examples, &cfg.train_config(it as u64))?;
            model = tuned.model;
            record.report = Some(tuned.report);
        }
        iterations.push(record);
    }
    Ok(RefineOutcome {
        model,
        initial,
        iterations,
    })
}

/// Segmentation, predicted label set and per-class soft scores of one document.
#[derive(Debug, Clone, PartialEq)]
pub struct DocumentPrediction {
    pub segmentation: Segmentation,
    /// Union of segment labels, null excluded.
    pub label_set: BTreeSet<usize>,
    /// Per class in C: the highest probability any returned segment gives it.
    pub soft_scores: Vec<f64>,
}

/// Segments `doc` over `candidates` (the null label is never added) and
/// derives the multilabel prediction from the segments.
pub fn predict(
    model: &ScorerModel,
    doc: &Document,
    candidates: &[usize],
    alpha: f64,
) -> Result<DocumentPrediction> {
    let table = build_score_table(model, doc)?;
    let segmentation = dp_segment(&table, candidates, &DpConfig::with_alpha(alpha))?;
    let null = model.null_index();
    let label_set = segmentation
        .labels
        .iter()
        .copied()
        .filter(|&l| l != null)
        .collect();
    let mut soft_scores = vec![0.0f64; model.n_classes()];
    for (start, end, _) in segmentation.segments() {
        for (s, &p) in soft_scores.iter_mut().zip(table.cell(start, end)) {
            *s = s.max(p);
        }
    }
    Ok(DocumentPrediction {
        segmentation,
        label_set,
        soft_scores,
    })
}

/// Which labels each document may be segmented with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidateMode {
    /// Every class in C.
    All,
    /// The document's own labels; unlabeled documents are an error.
    DocumentLabels,
}

/// Predicts every document in parallel, preserving input order.
pub fn predict_corpus(
    model: &ScorerModel,
    docs: &[Document],
    mode: CandidateMode,
    alpha: f64,
) -> Result<Vec<DocumentPrediction>> {
    let all: Vec<usize> = (0..model.n_classes()).collect();
    docs.par_iter()
        .map(|doc| match mode {
            CandidateMode::All => predict(model, doc, &all, alpha),
            CandidateMode::DocumentLabels => {
                predict(model, doc, &label_indices(model, doc)?, alpha)
            }
        })
        .collect()
}

/// Converts a prediction into named labeled segments.
pub fn named_segments(model: &ScorerModel, seg: &Segmentation) -> Vec<LabeledSegment<String>> {
    seg.segments()
        .map(|(s, e, l)| {
            LabeledSegment::new(s, e, model.label_name(l).unwrap_or("null").to_string())
        })
        .collect()
}

/// SOV and PPPA against ground-truth segmentations, with candidates = C.
pub fn evaluate_segmentation(
    model: &ScorerModel,
    docs: &[(Document, TrueSegmentation)],
    alpha: f64,
) -> Result<EvalReport> {
    let plain: Vec<Document> = docs.iter().map(|(d, _)| d.clone()).collect();
    let preds = predict_corpus(model, &plain, CandidateMode::All, alpha)?;
    let rows: Vec<_> = docs
        .iter()
        .zip(&preds)
        .map(|((d, truth), p)| {
            (
                d.id.clone(),
                truth.segments(),
                named_segments(model, &p.segmentation),
            )
        })
        .collect();
    segmentation_report(&rows)
}

fn seg_score(r: &EvalReport) -> f64 {
    r.sov.unwrap_or(0.0) + r.pppa.unwrap_or(0.0)
}

/// Picks the penalty from `grid` with the highest SOV + PPPA on
/// `validation`; ties go to the earlier grid entry. SOV alone saturates on
/// fragmented predictions, so it is not used by itself. Returns the penalty and its report.
pub fn select_alpha(
    model: &ScorerModel,
    validation: &[(Document, TrueSegmentation)],
    grid: &[f64],
) -> Result<(f64, EvalReport)> {
    let mut best: Option<(f64, EvalReport)> = None;
    for &alpha in grid {
        let report = evaluate_segmentation(model, validation, alpha)?;
        let better = match &best {
            None => true,
            Some((_, b)) => seg_score(&report) > seg_score(b),
        };
        if better {
            best = Some((alpha, report));
        }
    }
    best.ok_or_else(|| Error::InvalidConfig("empty alpha grid".into()))
}

/// Mean F1 and micro/macro AUC of the label-union prediction, with
/// per-document F1 rows.
pub fn classification_report(
    ids: &[String],
    predicted: &[BTreeSet<String>],
    scores: &[Vec<f64>],
    observed: &[BTreeSet<String>],
    classes: &[String],
) -> Result<EvalReport> {
    if ids.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            left: ids.len(),
            right: predicted.len(),
        });
    }
    let truth: Vec<Vec<bool>> = observed
        .iter()
        .map(|o| classes.iter().map(|c| o.contains(c)).collect())
        .collect();
    Ok(EvalReport {
        f1_mean: Some(f1_mean(predicted, observed)?),
        auc_micro: Some(auc(scores, &truth, AucMode::Micro)?),
        auc_macro: Some(auc(scores, &truth, AucMode::Macro)?),
        per_document: ids
            .iter()
            .zip(predicted.iter().zip(observed))
            .map(|(id, (p, o))| (id.clone(), "F1", document_f1(p, o)))
            .collect(),
        ..Default::default()
    })
}

pub fn evaluate_classification(
    model: &ScorerModel,
    docs: &[Document],
    alpha: f64,
) -> Result<EvalReport> {
    let preds = predict_corpus(model, docs, CandidateMode::All, alpha)?;
    let names = |p: &DocumentPrediction| -> BTreeSet<String> {
        p.label_set
            .iter()
            .map(|&l| model.classes()[l].clone())
            .collect()
    };
    let predicted: Vec<BTreeSet<String>> = preds.iter().map(names).collect();
    let scores: Vec<Vec<f64>> = preds.iter().map(|p| p.soft_scores.clone()).collect();
    let observed: Vec<BTreeSet<String>> = docs.iter().map(|d| d.labels.clone()).collect();
    let ids: Vec<String> = docs.iter().map(|d| d.id.clone()).collect();
    classification_report(&ids, &predicted, &scores, &observed, model.classes())
}

/// One line of the prediction dump.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    pub doc_id: String,
    pub labels: BTreeSet<String>,
    pub segmentation: TrueSegmentation,
    pub scores: Vec<(String, f64)>,
}

impl PredictionRecord {
    pub fn new(model: &ScorerModel, doc_id: &str, p: &DocumentPrediction) -> Self {
        let name = |l: usize| model.label_name(l).unwrap_or("null").to_string();
        Self {
            doc_id: doc_id.to_string(),
            labels: p.label_set.iter().map(|&l| name(l)).collect(),
            segmentation: TrueSegmentation {
                boundaries: p.segmentation.boundaries.clone(),
                labels: p.segmentation.labels.iter().map(|&l| name(l)).collect(),
            },
            scores: model
                .classes()
                .iter()
                .cloned()
                .zip(p.soft_scores.iter().copied())
                .collect(),
        }
    }
}

/// Writes `doc_id<TAB>labels<TAB>boundaries|labels<TAB>class:score,...` lines.
pub fn write_predictions<W: Write>(mut w: W, records: &[PredictionRecord]) -> Result<()> {
    for r in records {
        let labels: Vec<&str> = r.labels.iter().map(String::as_str).collect();
        let scores: Vec<String> = r
            .scores
            .iter()
            .map(|(c, s)| format!("{c}:{s:.6}"))
            .collect();
        writeln!(
            w,
            "{}\t{}\t{}\t{}",
            r.doc_id,
            labels.join(","),
            crate::corpus::io::format_truth(&r.segmentation),
            scores.join(",")
        )?;
    }
    Ok(())
}

/// Parses a prediction dump. Returns `(line, message)` on the first bad line.
pub fn parse_predictions(
    text: &str,
) -> std::result::Result<Vec<PredictionRecord>, (usize, String)> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |m: &str| (n + 1, m.to_string());
        let fields: Vec<&str> = line.split('\t').collect();
        let [id, labels, seg, scores] = fields.as_slice() else {
            return Err(bad("expected 4 tab-separated fields"));
        };
        let (b, l) = seg
            .split_once('|')
            .ok_or_else(|| bad("segmentation lacks '|'"))?;
        let boundaries = b
            .split(',')
            .map(|x| x.parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| bad("bad boundary"))?;
        let seg_labels: Vec<String> = l.split(',').map(String::from).collect();
        if boundaries.len() != seg_labels.len() + 1 {
            return Err(bad("boundary/label count mismatch"));
        }
        let scores = scores
            .split(',')
            .filter(|s| !s.is_empty())
            .map(|s| {
                let (c, v) = s.rsplit_once(':')?;
                Some((c.to_string(), v.parse::<f64>().ok()?))
            })
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| bad("bad class:score list"))?;
        out.push(PredictionRecord {
            doc_id: id.to_string(),
            labels: crate::corpus::parse_labels(labels),
            segmentation: TrueSegmentation {
                boundaries,
                labels: seg_labels,
            },
            scores,
        });
    }
    Ok(out)
}
