use std::collections::HashSet;

use super::{Document, RawDocument, TokenDocument};
use crate::stem::porter_stem;

/// Sentences with fewer content words than this are dropped.
pub const MIN_SENTENCE_WORDS: usize = 4;
/// Sentences with more content words than this are dropped.
pub const MAX_SENTENCE_WORDS: usize = 10;

/// Lowercases and splits on non-alphanumeric characters. Pure-number tokens
/// are discarded.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty() && !t.chars().all(|c| c.is_numeric()))
        .map(str::to_lowercase)
        .collect()
}

/// Tokenizes, removes stop-words, applies the sentence length rule and stems.
///
/// The length rule is applied to the word count after stop-word removal.
/// Returns `None` when the sentence is rejected.
pub fn preprocess_sentence(raw: &str, stopwords: &HashSet<&str>) -> Option<Vec<String>> {
    let words: Vec<String> = tokenize(raw)
        .into_iter()
        .filter(|w| !stopwords.contains(w.as_str()))
        .collect();
    if !(MIN_SENTENCE_WORDS..=MAX_SENTENCE_WORDS).contains(&words.len()) {
        return None;
    }
    Some(words.iter().map(|w| porter_stem(w)).collect())
}

/// Splits document text into sentences. Text containing the unit separator
/// (0x1F) is split on it; otherwise on `.`, `!` and `?`.
pub fn split_sentences(text: &str) -> Vec<String> {
    let pieces: Vec<&str> = if text.contains('\u{1f}') {
        text.split('\u{1f}').collect()
    } else {
        text.split(['.', '!', '?']).collect()
    };
    pieces
        .into_iter()
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PreprocessStats {
    pub documents_in: usize,
    pub documents_kept: usize,
    pub sentences_in: usize,
    pub sentences_kept: usize,
    /// Sentences rejected by the 4..=10 content-word rule.
    pub sentences_dropped_length: usize,
}

/// Runs [`preprocess_sentence`] over every sentence. Documents left without
/// any sentence are dropped.
pub fn preprocess_corpus(
    docs: &[RawDocument],
    stopwords: &HashSet<&str>,
) -> (Vec<TokenDocument>, PreprocessStats) {
    let mut stats = PreprocessStats {
        documents_in: docs.len(),
        ..Default::default()
    };
    let mut out = Vec::with_capacity(docs.len());
    for doc in docs {
        stats.sentences_in += doc.sentences.len();
        let sentences: Vec<Vec<String>> = doc
            .sentences
            .iter()
            .filter_map(|s| preprocess_sentence(s, stopwords))
            .collect();
        stats.sentences_kept += sentences.len();
        if !sentences.is_empty() {
            out.push(Document::new(doc.id.clone(), sentences, doc.labels.clone()));
        }
    }
    stats.documents_kept = out.len();
    stats.sentences_dropped_length = stats.sentences_in - stats.sentences_kept;
    (out, stats)
}
