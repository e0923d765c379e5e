//! Optimal labeled segmentation of a document under a per-segment penalty.

mod brute;
mod dp;
mod table;

use std::io::Write;

pub use brute::{brute_force_segment, MAX_BRUTE_FORCE_SENTENCES};
pub use dp::dp_segment;
pub use table::{build_score_table, ScoreTable};

use crate::error::{Error, Result};

/// Segmentation settings.
#[derive(Debug, Clone, PartialEq)]
pub struct DpConfig {
    /// Cost charged for every segment, including the first.
    pub alpha: f64,
    /// Adds the null label (the table's last label) to the candidates.
    pub include_null: bool,
    /// Longest allowed segment, in sentences. `None` means unlimited.
    pub max_segment_len: Option<usize>,
}

impl Default for DpConfig {
    fn default() -> Self {
        Self {
            alpha: 0.3,
            include_null: false,
            max_segment_len: None,
        }
    }
}

impl DpConfig {
    pub fn with_alpha(alpha: f64) -> Self {
        Self {
            alpha,
            ..Default::default()
        }
    }
}

/// Boundaries `0 = s0 < s1 < ... < su = d_q`, one label per segment, and
/// the objective `sum(score - alpha)` of the labeled segments.
#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    pub boundaries: Vec<usize>,
    pub labels: Vec<usize>,
    pub objective: f64,
}

impl Segmentation {
    pub fn n_segments(&self) -> usize {
        self.labels.len()
    }

    /// `(start, end, label)` with 1-based inclusive sentence ranges.
    pub fn segments(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.boundaries
            .windows(2)
            .zip(&self.labels)
            .map(|(w, &l)| (w[0] + 1, w[1], l))
    }

    /// Checks the structural invariants against a document of `n` sentences
    /// and the allowed labels.
    pub fn validate(&self, n: usize, candidates: &[usize]) -> Result<()> {
        let fail = |reason: String| Err(Error::NotTiling { n, reason });
        if self.labels.is_empty() {
            return fail("no segments".into());
        }
        if self.boundaries.len() != self.labels.len() + 1 {
            return fail("boundary/label count mismatch".into());
        }
        if self.boundaries[0] != 0 || *self.boundaries.last().unwrap() != n {
            return fail(format!(
                "boundaries {:?} do not span the document",
                self.boundaries
            ));
        }
        if self.boundaries.windows(2).any(|w| w[0] >= w[1]) {
            return fail("boundaries not strictly increasing".into());
        }
        if self.labels.windows(2).any(|w| w[0] == w[1]) {
            return fail("adjacent segments share a label".into());
        }
        if let Some(l) = self.labels.iter().find(|l| !candidates.contains(l)) {
            return fail(format!("label {l} is not a candidate"));
        }
        Ok(())
    }
}

/// Writes `start<TAB>end<TAB>label<TAB>score` per segment followed by an
/// `objective<TAB>value` line. `label_name` maps label indices to names.
pub fn write_segmentation<W: Write>(
    mut w: W,
    seg: &Segmentation,
    table: &ScoreTable,
    label_name: impl Fn(usize) -> String,
) -> Result<()> {
    for (start, end, label) in seg.segments() {
        writeln!(
            w,
            "{start}\t{end}\t{}\t{:.6}",
            label_name(label),
            table.get(start, end, label)
        )?;
    }
    writeln!(w, "objective\t{:.6}", seg.objective)?;
    Ok(())
}
