use super::Document;
use crate::error::{Error, Result};

/// Bag-of-words feature vector of logical length |V|, stored sparsely.
///
/// Vectors built from counts are scaled to unit L2 norm; the zero vector
/// stays zero.
#[derive(Debug, Clone, PartialEq)]
pub struct BowVector {
    dim: usize,
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl BowVector {
    /// The all-zero vector.
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Unit-normalized term counts. Entries with zero count are skipped;
    /// indices must be distinct.
    pub fn from_counts(dim: usize, counts: impl IntoIterator<Item = (u32, u32)>) -> Self {
        let mut pairs: Vec<(u32, u32)> = counts.into_iter().filter(|&(_, c)| c > 0).collect();
        pairs.sort_unstable();
        let norm = pairs
            .iter()
            .map(|&(_, c)| (c as f64) * (c as f64))
            .sum::<f64>()
            .sqrt();
        let (indices, values) = pairs.into_iter().map(|(i, c)| (i, c as f64 / norm)).unzip();
        Self {
            dim,
            indices,
            values,
        }
    }

    /// Wraps raw dense values as-is, without normalization or validation.
    pub fn from_dense(dense: &[f64]) -> Self {
        let (indices, values) = dense
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, &v)| (i as u32, v))
            .unzip();
        Self {
            dim: dense.len(),
            indices,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Non-zero entries as `(index, value)`, in increasing index order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices
            .iter()
            .zip(&self.values)
            .map(|(&i, &v)| (i as usize, v))
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (i, v) in self.iter() {
            out[i] = v;
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Cumulative per-sentence term counts: row k holds the counts of sentences
/// 1..=k, row 0 is all zeros.
#[derive(Debug, Clone)]
pub struct PrefixSums {
    vocab_size: usize,
    n_sentences: usize,
    rows: Vec<u32>,
}

impl PrefixSums {
    pub fn new(doc: &Document, vocab_size: usize) -> Result<Self> {
        let n = doc.len();
        let mut rows = vec![0u32; (n + 1) * vocab_size];
        for (k, sentence) in doc.sentences.iter().enumerate() {
            let (prev, cur) = rows.split_at_mut((k + 1) * vocab_size);
            let cur = &mut cur[..vocab_size];
            cur.copy_from_slice(&prev[k * vocab_size..]);
            for &t in &sentence.token_ids {
                let t = t as usize;
                if t >= vocab_size {
                    return Err(Error::DimensionMismatch {
                        expected: vocab_size,
                        got: t + 1,
                    });
                }
                cur[t] += 1;
            }
        }
        Ok(Self {
            vocab_size,
            n_sentences: n,
            rows,
        })
    }

    pub fn n_sentences(&self) -> usize {
        self.n_sentences
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    fn row(&self, k: usize) -> &[u32] {
        &self.rows[k * self.vocab_size..(k + 1) * self.vocab_size]
    }

    fn check_range(&self, start: usize, end: usize) -> Result<()> {
        if start == 0 || start > end || end > self.n_sentences {
            return Err(Error::RangeOutOfBounds {
                start,
                end,
                len: self.n_sentences,
            });
        }
        Ok(())
    }

    /// Raw term counts of sentences `start..=end` (1-based), as `(id, count)`.
    pub fn range_counts(&self, start: usize, end: usize) -> Result<Vec<(u32, u32)>> {
        self.check_range(start, end)?;
        let hi = self.row(end);
        let lo = self.row(start - 1);
        Ok(hi
            .iter()
            .zip(lo)
            .enumerate()
            .filter(|(_, (h, l))| h > l)
            .map(|(i, (h, l))| (i as u32, h - l))
            .collect())
    }

    /// Normalized bag of words for sentences `start..=end` (1-based, inclusive).
    pub fn bow(&self, start: usize, end: usize) -> Result<BowVector> {
        Ok(BowVector::from_counts(
            self.vocab_size,
            self.range_counts(start, end)?,
        ))
    }
}

/// Normalized bag of words of a sentence range, counted directly.
#[cfg(test)]
pub(crate) fn recount_bow(
    doc: &Document,
    vocab_size: usize,
    start: usize,
    end: usize,
) -> BowVector {
    let mut counts = std::collections::BTreeMap::<u32, u32>::new();
    for s in &doc.sentences[start - 1..end] {
        for &t in &s.token_ids {
            *counts.entry(t).or_default() += 1;
        }
    }
    BowVector::from_counts(vocab_size, counts)
}
