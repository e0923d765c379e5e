use std::cmp::Ordering;

use super::dp::{effective_candidates, preference};
use super::{DpConfig, ScoreTable, Segmentation};
use crate::error::{Error, Result};

/// Documents longer than this are refused by [`brute_force_segment`].
pub const MAX_BRUTE_FORCE_SENTENCES: usize = 12;

/// Enumerates every labeled segmentation (adjacent labels distinct) and
/// returns the best one under the same preference order as
/// [`dp_segment`](super::dp_segment). Reference oracle for small documents.
pub fn brute_force_segment(
    table: &ScoreTable,
    candidates: &[usize],
    cfg: &DpConfig,
) -> Result<Segmentation> {
    let labels = effective_candidates(table, candidates, cfg)?;
    let n = table.n_sentences();
    if n > MAX_BRUTE_FORCE_SENTENCES {
        return Err(Error::TooLongForBruteForce {
            max: MAX_BRUTE_FORCE_SENTENCES,
            got: n,
        });
    }
    if n == 0 {
        return Err(Error::InvalidConfig("document has no sentences".into()));
    }
    let mut search = Search {
        table,
        labels: &labels,
        alpha: cfg.alpha,
        max_len: cfg.max_segment_len.unwrap_or(n),
        n,
        ends: Vec::new(),
        chosen: Vec::new(),
        best: None,
    };
    search.extend(0, None);
    let (objective, chosen, ends) = search.best.ok_or_else(|| {
        Error::InvalidConfig("no feasible segmentation under the segment length cap".into())
    })?;
    let mut boundaries = vec![0];
    boundaries.extend(ends);
    Ok(Segmentation {
        boundaries,
        labels: chosen,
        objective,
    })
}

struct Search<'a> {
    table: &'a ScoreTable,
    labels: &'a [usize],
    alpha: f64,
    max_len: usize,
    n: usize,
    ends: Vec<usize>,
    chosen: Vec<usize>,
    best: Option<(f64, Vec<usize>, Vec<usize>)>,
}

impl Search<'_> {
    fn extend(&mut self, start: usize, prev: Option<usize>) {
        if start == self.n {
            self.consider();
            return;
        }
        for end in start + 1..=self.n.min(start + self.max_len) {
            for &l in self.labels {
                if Some(l) == prev {
                    continue;
                }
                self.ends.push(end);
                self.chosen.push(l);
                self.extend(end, Some(l));
                self.ends.pop();
                self.chosen.pop();
            }
        }
    }

    fn consider(&mut self) {
        // accumulate from the last segment backwards
        let mut value = 0.0;
        for idx in (0..self.chosen.len()).rev() {
            let start = if idx == 0 { 0 } else { self.ends[idx - 1] };
            let head = self.table.get(start + 1, self.ends[idx], self.chosen[idx]) - self.alpha;
            value = if idx + 1 == self.chosen.len() {
                head
            } else {
                head + value
            };
        }
        let better = match &self.best {
            None => true,
            Some((v, l, e)) => {
                preference(
                    (value, self.chosen.len(), &self.chosen, &self.ends),
                    (*v, l.len(), l, e),
                ) == Ordering::Less
            }
        };
        if better {
            self.best = Some((value, self.chosen.clone(), self.ends.clone()));
        }
    }
}
