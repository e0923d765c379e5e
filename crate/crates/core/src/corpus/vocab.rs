use std::collections::{BTreeMap, HashMap};

use sha2::{Digest, Sha256};

use super::{Document, Sentence, TokenDocument};
use crate::error::{Error, Result};

/// Tokens occurring fewer times than this across the corpus are dropped.
pub const MIN_TOKEN_COUNT: u64 = 4;

/// Bidirectional token/id map. Ids are dense and assigned in lexicographic
/// token order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    token_to_id: HashMap<String, u32>,
    id_to_token: Vec<String>,
    counts: Vec<u64>,
}

/// Counts tokens across `docs` and keeps those occurring at least
/// [`MIN_TOKEN_COUNT`] times.
pub fn build_vocabulary(docs: &[TokenDocument]) -> Result<Vocabulary> {
    if docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for token in docs.iter().flat_map(|d| d.sentences.iter().flatten()) {
        *counts.entry(token.as_str()).or_default() += 1;
    }
    let vocab = Vocabulary::from_counts(
        counts
            .into_iter()
            .filter(|&(_, c)| c >= MIN_TOKEN_COUNT)
            .map(|(t, c)| (t.to_string(), c)),
    );
    if vocab.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    Ok(vocab)
}

impl Vocabulary {
    /// Builds a vocabulary from `(token, count)` pairs; ids follow token order.
    pub fn from_counts(entries: impl IntoIterator<Item = (String, u64)>) -> Self {
        let mut entries: Vec<(String, u64)> = entries.into_iter().collect();
        entries.sort();
        entries.dedup_by(|a, b| a.0 == b.0);
        let token_to_id = entries
            .iter()
            .enumerate()
            .map(|(i, (t, _))| (t.clone(), i as u32))
            .collect();
        let (id_to_token, counts) = entries.into_iter().unzip();
        Self {
            token_to_id,
            id_to_token,
            counts,
        }
    }

    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_token.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.token_to_id.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.id_to_token.get(id as usize).map(String::as_str)
    }

    pub fn count(&self, id: u32) -> Option<u64> {
        self.counts.get(id as usize).copied()
    }

    /// `(token, id, count)` in id order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, u32, u64)> + '_ {
        self.id_to_token
            .iter()
            .zip(&self.counts)
            .enumerate()
            .map(|(i, (t, &c))| (t.as_str(), i as u32, c))
    }

    /// Maps tokens to ids, silently dropping out-of-vocabulary tokens.
    /// Sentences that lose every token are kept as empty sentences.
    pub fn encode(&self, doc: &TokenDocument) -> Document {
        let sentences = doc
            .sentences
            .iter()
            .map(|s| Sentence::new(s.iter().filter_map(|t| self.id(t)).collect()))
            .collect();
        Document::new(doc.id.clone(), sentences, doc.labels.clone())
    }

    /// Removes out-of-vocabulary tokens while keeping the string form.
    pub fn prune(&self, doc: &TokenDocument) -> TokenDocument {
        let sentences = doc
            .sentences
            .iter()
            .map(|s| s.iter().filter(|t| self.id(t).is_some()).cloned().collect())
            .collect();
        Document::new(doc.id.clone(), sentences, doc.labels.clone())
    }

    /// Content hash over the canonical `token\tid\tcount` serialization, as 16 hex digits.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        for (t, id, c) in self.iter() {
            hasher.update(format!("{t}\t{id}\t{c}\n").as_bytes());
        }
        hasher
            .finalize()
            .iter()
            .take(8)
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
