use rayon::prelude::*;

use crate::classifier::ScorerModel;
use crate::corpus::Document;
use crate::error::{Error, Result};

/// Scores `q(i, j, l)` for every sentence range `1 <= i <= j <= n` and label.
///
/// Stored as a packed upper triangle, ranges grouped by start.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    n: usize,
    n_labels: usize,
    data: Vec<f64>,
}

impl ScoreTable {
    pub fn zeros(n: usize, n_labels: usize) -> Self {
        Self {
            n,
            n_labels,
            data: vec![0.0; n * (n + 1) / 2 * n_labels],
        }
    }

    pub fn from_fn(
        n: usize,
        n_labels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut t = Self::zeros(n, n_labels);
        for i in 1..=n {
            for j in i..=n {
                for l in 0..n_labels {
                    t.set(i, j, l, f(i, j, l));
                }
            }
        }
        t
    }

    pub fn n_sentences(&self) -> usize {
        self.n
    }

    pub fn n_labels(&self) -> usize {
        self.n_labels
    }

    pub fn n_cells(&self) -> usize {
        self.n * (self.n + 1) / 2
    }

    fn offset(&self, i: usize, j: usize) -> usize {
        assert!(
            1 <= i && i <= j && j <= self.n,
            "range {i}..={j} outside 1..={}",
            self.n
        );
        // ranges starting before i: n + (n-1) + ... + (n-i+2)
        let before = (i - 1) * (2 * self.n + 2 - i) / 2;
        (before + j - i) * self.n_labels
    }

    pub fn get(&self, i: usize, j: usize, label: usize) -> f64 {
        self.data[self.offset(i, j) + label]
    }

    pub fn set(&mut self, i: usize, j: usize, label: usize, value: f64) {
        let o = self.offset(i, j);
        self.data[o + label] = value;
    }

    /// All label scores of range `i..=j`.
    pub fn cell(&self, i: usize, j: usize) -> &[f64] {
        let o = self.offset(i, j);
        &self.data[o..o + self.n_labels]
    }

    pub fn check_candidates(&self, labels: &[usize]) -> Result<()> {
        if labels.is_empty() {
            return Err(Error::EmptyCandidates);
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= self.n_labels) {
            return Err(Error::CandidateOutOfRange {
                label,
                n_labels: self.n_labels,
            });
        }
        Ok(())
    }
}

/// Scores every sentence range of `doc` with `model`, all |C|+1 outputs per range.
///
/// The first layer is linear in the counts, so for a fixed start the hidden
/// pre-activation is accumulated sentence by sentence and divided by the
/// running L2 norm of the counts.
pub fn build_score_table(model: &ScorerModel, doc: &Document) -> Result<ScoreTable> {
    let v = model.vocab_size();
    if let Some(&t) = doc
        .sentences
        .iter()
        .flat_map(|s| &s.token_ids)
        .find(|&&t| t as usize >= v)
    {
        return Err(Error::DimensionMismatch {
            expected: v,
            got: t as usize + 1,
        });
    }
    let n = doc.len();
    let h = model.hidden();
    let n_out = model.n_outputs();
    let rows: Vec<Vec<f64>> = (1..=n)
        .into_par_iter()
        .map(|i| {
            let mut counts = std::collections::HashMap::<u32, u64>::new();
            let mut sq = 0u64;
            let mut acc = vec![0.0f64; h];
            let mut row = Vec::with_capacity((n - i + 1) * n_out);
            let mut pre = vec![0.0f64; h];
            for s in &doc.sentences[i - 1..] {
                for &t in &s.token_ids {
                    let c = counts.entry(t).or_default();
                    sq += 2 * *c + 1;
                    *c += 1;
                    for (a, w) in acc.iter_mut().zip(model.w1_row(t as usize)) {
                        *a += w;
                    }
                }
                let norm = (sq as f64).sqrt();
                for ((p, a), b) in pre.iter_mut().zip(&acc).zip(model.b1()) {
                    *p = if sq == 0 { *b } else { b + a / norm };
                }
                row.extend(model.output_from_hidden_pre(&pre));
            }
            row
        })
        .collect();
    Ok(ScoreTable {
        n,
        n_labels: n_out,
        data: rows.concat(),
    })
}
