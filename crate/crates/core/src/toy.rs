//! Generated corpora with known token provenance.
//!
//! Every class owns a pool of tokens; a fraction of each pool can be drawn
//! from a pool shared by all classes. Each sentence is generated by one
//! class, so the class behind any span of sentences is known exactly.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{
    build_vocabulary, split_train_test, synthesize_test_set, Document, Sentence, SyntheticDocument,
    TokenDocument, Vocabulary,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ToyConfig {
    pub n_classes: usize,
    pub tokens_per_class: usize,
    /// Fraction of each class pool taken from the shared pool.
    pub shared_fraction: f64,
    pub n_singles: usize,
    pub n_multis: usize,
    pub n_test: usize,
    /// Inclusive sentence-count range of single-label documents.
    pub single_sentences: (usize, usize),
    /// Inclusive sentence-count range of each class block in multilabel documents.
    pub block_sentences: (usize, usize),
    pub words_per_sentence: (usize, usize),
    pub seed: u64,
}

impl ToyConfig {
    /// Disjoint class vocabularies.
    pub fn separable(seed: u64) -> Self {
        Self {
            n_classes: 3,
            tokens_per_class: 50,
            shared_fraction: 0.0,
            n_singles: 200,
            n_multis: 100,
            n_test: 50,
            single_sentences: (5, 9),
            block_sentences: (2, 5),
            words_per_sentence: (4, 10),
            seed,
        }
    }

    /// 30% of every class pool is shared with the other classes.
    pub fn overlapping(seed: u64) -> Self {
        Self {
            shared_fraction: 0.3,
            ..Self::separable(seed)
        }
    }
}

#[derive(Debug, Clone)]
pub struct ToyCorpus {
    pub classes: Vec<String>,
    pub vocab: Vocabulary,
    /// Training split: single-label documents followed by multilabel ones,
    /// labels only at document level.
    pub train: Vec<Document>,
    /// Generating class index of every sentence of every training document.
    pub train_sources: Vec<Vec<usize>>,
    /// Held-out single-label documents the test set is built from.
    pub test_singles: Vec<Document>,
    pub test: Vec<SyntheticDocument<Sentence>>,
    /// Built like `test` from a second held-out set of single-label
    /// documents, for hyperparameter selection.
    pub validation: Vec<SyntheticDocument<Sentence>>,
}

impl ToyCorpus {
    pub fn generate(cfg: &ToyConfig) -> Result<Self> {
        if cfg.n_classes < 2
            || cfg.tokens_per_class == 0
            || !(0.0..1.0).contains(&cfg.shared_fraction)
        {
            return Err(Error::InvalidConfig(format!("bad toy config {cfg:?}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let classes: Vec<String> = (0..cfg.n_classes).map(|c| format!("topic{c}")).collect();
        let n_shared = (cfg.tokens_per_class as f64 * cfg.shared_fraction).round() as usize;
        let pools: Vec<Vec<String>> = (0..cfg.n_classes)
            .map(|c| {
                (0..cfg.tokens_per_class - n_shared)
                    .map(|k| format!("c{c}w{k}"))
                    .chain((0..n_shared).map(|k| format!("shared{k}")))
                    .collect()
            })
            .collect();

        let sentence = |rng: &mut ChaCha8Rng, c: usize| -> Vec<String> {
            let len = rng.gen_range(cfg.words_per_sentence.0..=cfg.words_per_sentence.1);
            (0..len)
                .map(|_| pools[c].choose(rng).unwrap().clone())
                .collect()
        };

        let mut singles = Vec::with_capacity(cfg.n_singles);
        for d in 0..cfg.n_singles {
            let c = d % cfg.n_classes;
            let len = rng.gen_range(cfg.single_sentences.0..=cfg.single_sentences.1);
            let sentences = (0..len).map(|_| sentence(&mut rng, c)).collect();
            let doc =
                TokenDocument::new(format!("single{d}"), sentences, [classes[c].clone()].into());
            singles.push((doc, vec![c; len]));
        }

        // every subset of at least two classes
        let label_sets: Vec<Vec<usize>> = (0u32..1 << cfg.n_classes)
            .filter(|m| m.count_ones() >= 2)
            .map(|m| (0..cfg.n_classes).filter(|c| m & (1 << c) != 0).collect())
            .collect();
        let mut multis = Vec::with_capacity(cfg.n_multis);
        for d in 0..cfg.n_multis {
            let mut labels = label_sets.choose(&mut rng).unwrap().clone();
            labels.shuffle(&mut rng);
            let mut sentences = Vec::new();
            let mut sources = Vec::new();
            for &c in &labels {
                let len = rng.gen_range(cfg.block_sentences.0..=cfg.block_sentences.1);
                for _ in 0..len {
                    sentences.push(sentence(&mut rng, c));
                    sources.push(c);
                }
            }
            let names = labels.iter().map(|&c| classes[c].clone()).collect();
            multis.push((
                TokenDocument::new(format!("multi{d}"), sentences, names),
                sources,
            ));
        }

        let all: Vec<TokenDocument> = singles
            .iter()
            .chain(&multis)
            .map(|(d, _)| d.clone())
            .collect();
        let vocab = build_vocabulary(&all)?;
        let encode = |items: Vec<(TokenDocument, Vec<usize>)>| -> Vec<(Document, Vec<usize>)> {
            items
                .into_iter()
                .map(|(d, s)| (vocab.encode(&d), s))
                .collect()
        };
        let (rest, test_singles) = split_train_test(&encode(singles), cfg.seed)?;
        let (train_singles, validation_singles) =
            split_train_test(&rest, cfg.seed.wrapping_add(2))?;
        let (train_multis, _) = split_train_test(&encode(multis), cfg.seed)?;
        let all_multis: Vec<Document> = all[cfg.n_singles..]
            .iter()
            .map(|d| vocab.encode(d))
            .collect();
        let test_singles: Vec<Document> = test_singles.into_iter().map(|(d, _)| d).collect();
        let test = synthesize_test_set(
            &test_singles,
            &all_multis,
            cfg.n_test,
            cfg.seed.wrapping_add(1),
        )?;
        let validation_singles: Vec<Document> =
            validation_singles.into_iter().map(|(d, _)| d).collect();
        let validation = synthesize_test_set(
            &validation_singles,
            &all_multis,
            cfg.n_test,
            cfg.seed.wrapping_add(3),
        )?;
        let (train, train_sources) = train_singles.into_iter().chain(train_multis).unzip();
        Ok(Self {
            classes,
            vocab,
            train,
            train_sources,
            test_singles,
            test,
            validation,
        })
    }

    /// Class that generated most tokens of sentences `start..=end` (1-based)
    /// of training document `doc`. Ties go to the smaller class index;
    /// `None` if the span has no tokens.
    pub fn majority_class(&self, doc: usize, start: usize, end: usize) -> Option<usize> {
        let mut counts = vec![0usize; self.classes.len()];
        for k in start - 1..end {
            counts[self.train_sources[doc][k]] += self.train[doc].sentences[k].token_ids.len();
        }
        let best = *counts.iter().max()?;
        (best > 0).then(|| counts.iter().position(|&c| c == best).unwrap())
    }
}
