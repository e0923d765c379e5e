use std::cmp::Ordering;

use super::{DpConfig, ScoreTable, Segmentation};
use crate::error::{Error, Result};

/// Candidate labels after applying `include_null`, sorted and deduplicated.
/// The null label is the table's last label.
pub(crate) fn effective_candidates(
    table: &ScoreTable,
    candidates: &[usize],
    cfg: &DpConfig,
) -> Result<Vec<usize>> {
    let mut labels = candidates.to_vec();
    if cfg.include_null && table.n_labels() > 0 {
        labels.push(table.n_labels() - 1);
    }
    labels.sort_unstable();
    labels.dedup();
    table.check_candidates(&labels)?;
    if !cfg.alpha.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "alpha must be finite, got {}",
            cfg.alpha
        )));
    }
    if cfg.max_segment_len == Some(0) {
        return Err(Error::InvalidConfig(
            "max_segment_len must be at least 1".into(),
        ));
    }
    Ok(labels)
}

/// Orders two complete solutions: higher objective first, then fewer
/// segments, then the lexicographically smaller label sequence, then the
/// lexicographically smaller boundary sequence. `Less` means `a` is preferred.
pub(crate) fn preference(
    a: (f64, usize, &[usize], &[usize]),
    b: (f64, usize, &[usize], &[usize]),
) -> Ordering {
    b.0.total_cmp(&a.0)
        .then(a.1.cmp(&b.1))
        .then_with(|| a.2.cmp(b.2))
        .then_with(|| a.3.cmp(b.3))
}

#[derive(Clone, Copy)]
struct State {
    value: f64,
    segments: usize,
    /// Exclusive end (0-based) of the first segment.
    end: usize,
    /// Candidate slot of the next segment's label.
    next: Option<usize>,
}

struct Solver<'a> {
    labels: &'a [usize],
    /// states[k][c]: best segmentation of sentences k.. (0-based) whose first
    /// segment carries labels[c].
    states: Vec<Vec<State>>,
}

impl Solver<'_> {
    /// Label and end sequences of the solution that starts at `k` with slot `c`.
    fn trace(&self, mut k: usize, mut c: usize, labels: &mut Vec<usize>, ends: &mut Vec<usize>) {
        let n = self.states.len();
        loop {
            let s = self.states[k][c];
            labels.push(self.labels[c]);
            ends.push(s.end);
            match s.next {
                Some(nc) if s.end < n => {
                    k = s.end;
                    c = nc;
                }
                _ => return,
            }
        }
    }

    fn sequences(&self, slot: usize, state: State) -> (Vec<usize>, Vec<usize>) {
        let mut labels = vec![self.labels[slot]];
        let mut ends = vec![state.end];
        if let Some(nc) = state.next {
            self.trace(state.end, nc, &mut labels, &mut ends);
        }
        (labels, ends)
    }

    /// Full-key comparison of two states with the same start.
    fn cmp_states(&self, a: (usize, State), b: (usize, State)) -> Ordering {
        let quick =
            b.1.value
                .total_cmp(&a.1.value)
                .then(a.1.segments.cmp(&b.1.segments));
        if quick != Ordering::Equal {
            return quick;
        }
        let (la, ea) = self.sequences(a.0, a.1);
        let (lb, eb) = self.sequences(b.0, b.1);
        preference((0.0, 0, &la, &ea), (0.0, 0, &lb, &eb))
    }
}

/// Exact maximizer of `sum over segments (score - alpha)` over contiguous,
/// spanning segmentations whose adjacent segments carry different labels.
///
/// Works right to left over suffixes. For each suffix start it keeps the
/// best and second-best first labels, so the "best continuation with a
/// different label" lookup is O(1) and the total cost is
/// O(d_q^2 * |candidates|).
pub fn dp_segment(
    table: &ScoreTable,
    candidates: &[usize],
    cfg: &DpConfig,
) -> Result<Segmentation> {
    let labels = effective_candidates(table, candidates, cfg)?;
    let n = table.n_sentences();
    if n == 0 {
        return Err(Error::InvalidConfig("document has no sentences".into()));
    }
    let n_cand = labels.len();
    let max_len = cfg.max_segment_len.unwrap_or(n);
    let placeholder = State {
        value: f64::NEG_INFINITY,
        segments: 0,
        end: 0,
        next: None,
    };
    let mut solver = Solver {
        labels: &labels,
        states: vec![vec![placeholder; n_cand]; n],
    };
    // top[k] = (best slot, second-best slot) among feasible states[k]
    let mut top: Vec<Option<(usize, Option<usize>)>> = vec![None; n + 1];

    for k in (0..n).rev() {
        for c in 0..n_cand {
            let label = labels[c];
            let mut best: Option<State> = None;
            for end in (k + 1)..=(n.min(k + max_len)) {
                let head = table.get(k + 1, end, label) - cfg.alpha;
                let candidate = if end == n {
                    State {
                        value: head,
                        segments: 1,
                        end,
                        next: None,
                    }
                } else {
                    let Some((b0, b1)) = top[end] else { continue };
                    let slot = if b0 != c { Some(b0) } else { b1 };
                    let Some(slot) = slot else { continue };
                    let rest = solver.states[end][slot];
                    State {
                        value: head + rest.value,
                        segments: rest.segments + 1,
                        end,
                        next: Some(slot),
                    }
                };
                best = match best {
                    None => Some(candidate),
                    Some(cur) => {
                        if solver.cmp_states((c, candidate), (c, cur)) == Ordering::Less {
                            Some(candidate)
                        } else {
                            Some(cur)
                        }
                    }
                };
            }
            if let Some(s) = best {
                solver.states[k][c] = s;
            }
        }
        let mut order: Vec<usize> = (0..n_cand)
            .filter(|&c| solver.states[k][c].value > f64::NEG_INFINITY)
            .collect();
        order.sort_by(|&a, &b| {
            solver.cmp_states((a, solver.states[k][a]), (b, solver.states[k][b]))
        });
        top[k] = match order.as_slice() {
            [] => None,
            [a] => Some((*a, None)),
            [a, b, ..] => Some((*a, Some(*b))),
        };
    }

    let Some((first, _)) = top[0] else {
        return Err(Error::InvalidConfig(
            "no feasible segmentation under the segment length cap".into(),
        ));
    };
    let mut seq_labels = Vec::new();
    let mut ends = Vec::new();
    solver.trace(0, first, &mut seq_labels, &mut ends);
    let mut boundaries = Vec::with_capacity(ends.len() + 1);
    boundaries.push(0);
    boundaries.extend(ends);
    Ok(Segmentation {
        boundaries,
        labels: seq_labels,
        objective: solver.states[0][first].value,
    })
}
