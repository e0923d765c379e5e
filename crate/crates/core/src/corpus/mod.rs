//! Corpus ingestion, preprocessing, vocabulary, features and test-set construction.

pub(crate) mod features;
pub mod io;
mod preprocess;
mod split;
mod synth;
mod vocab;

use std::collections::BTreeSet;

pub use features::{BowVector, PrefixSums};
pub use preprocess::{
    preprocess_corpus, preprocess_sentence, split_sentences, tokenize, PreprocessStats,
    MAX_SENTENCE_WORDS, MIN_SENTENCE_WORDS,
};
pub use split::split_train_test;
pub use synth::{synthesize_test_set, SyntheticDocument, TrueSegmentation, MAX_DRAWS};
pub use vocab::{build_vocabulary, Vocabulary, MIN_TOKEN_COUNT};

/// A sentence after vocabulary encoding. May be empty when every token was
/// pruned as rare; it keeps its position so per-sentence metrics stay aligned.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Sentence {
    pub token_ids: Vec<u32>,
}

impl Sentence {
    pub fn new(token_ids: Vec<u32>) -> Self {
        Self { token_ids }
    }
}

/// A document as an ordered list of sentences plus its document-level labels.
///
/// `S` is the sentence representation: [`Sentence`] once encoded against a
/// vocabulary, `Vec<String>` for stemmed tokens, `String` for raw text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document<S = Sentence> {
    pub id: String,
    pub sentences: Vec<S>,
    pub labels: BTreeSet<String>,
}

/// Stemmed, stop-word-filtered tokens per sentence.
pub type TokenDocument = Document<Vec<String>>;

/// Unprocessed sentence text.
pub type RawDocument = Document<String>;

impl<S> Document<S> {
    pub fn new(id: impl Into<String>, sentences: Vec<S>, labels: BTreeSet<String>) -> Self {
        Self {
            id: id.into(),
            sentences,
            labels,
        }
    }

    /// Number of sentences, d_q.
    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }
}

/// Collects the sorted set of class names used across `docs`.
pub fn class_names<'a, S: 'a>(docs: impl IntoIterator<Item = &'a Document<S>>) -> Vec<String> {
    let set: BTreeSet<&String> = docs.into_iter().flat_map(|d| d.labels.iter()).collect();
    set.into_iter().cloned().collect()
}

/// Parses a comma-separated label field. Empty fields yield an empty set.
pub fn parse_labels(field: &str) -> BTreeSet<String> {
    field
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}
