//! Segmentation metrics (PPPA, SOV) and multilabel classification metrics
//! (mean per-document F1, micro/macro ROC AUC).

use std::collections::BTreeSet;
use std::fmt;

use log::warn;

use crate::error::{Error, Result};

/// A labeled sentence range, 1-based and inclusive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledSegment<L> {
    pub start: usize,
    pub end: usize,
    pub label: L,
}

impl<L> LabeledSegment<L> {
    pub fn new(start: usize, end: usize, label: L) -> Self {
        Self { start, end, label }
    }

    pub fn len(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end < self.start
    }
}

fn check_tiling<L>(segments: &[LabeledSegment<L>], n: usize) -> Result<()> {
    let fail = |reason: String| Err(Error::NotTiling { n, reason });
    if segments.is_empty() {
        return fail("no segments".into());
    }
    let mut next = 1;
    for s in segments {
        if s.start != next || s.end < s.start {
            return fail(format!("segment {}..={} breaks contiguity", s.start, s.end));
        }
        next = s.end + 1;
    }
    if next != n + 1 {
        return fail(format!("segments end at {}", next - 1));
    }
    Ok(())
}

/// Expands tiling segments into one label per sentence.
pub fn sentence_labeling<L: Clone>(segments: &[LabeledSegment<L>]) -> Vec<L> {
    segments
        .iter()
        .flat_map(|s| std::iter::repeat_n(s.label.clone(), s.len()))
        .collect()
}

/// Per-point prediction accuracy: the fraction of sentences whose labels agree.
pub fn pppa<L: PartialEq>(observed: &[L], predicted: &[L]) -> Result<f64> {
    if observed.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            left: observed.len(),
            right: predicted.len(),
        });
    }
    if observed.is_empty() {
        return Err(Error::LengthMismatch { left: 0, right: 0 });
    }
    let hits = observed
        .iter()
        .zip(predicted)
        .filter(|(a, b)| a == b)
        .count();
    Ok(hits as f64 / observed.len() as f64)
}

/// Segment overlap score.
///
/// Sums `(minov + delta) / maxov * len(s1)` over observed/predicted pairs
/// that share a label and overlap, divides by `n`, and clamps to `[0, 1]`.
/// `minov` is the shared length, `maxov` the length of the combined span,
/// and `delta = min(maxov - minov, minov, len(s1) / 2, len(s2) / 2)`.
pub fn sov<L: PartialEq>(
    observed: &[LabeledSegment<L>],
    predicted: &[LabeledSegment<L>],
    n: usize,
) -> Result<f64> {
    check_tiling(observed, n)?;
    check_tiling(predicted, n)?;
    Ok((overlap_sum(observed, predicted, true) / n as f64).clamp(0.0, 1.0))
}

fn overlap_sum<L: PartialEq>(
    observed: &[LabeledSegment<L>],
    predicted: &[LabeledSegment<L>],
    with_delta: bool,
) -> f64 {
    let mut total = 0.0;
    for s1 in observed {
        for s2 in predicted {
            if s1.label != s2.label {
                continue;
            }
            let lo = s1.start.max(s2.start);
            let hi = s1.end.min(s2.end);
            if lo > hi {
                continue;
            }
            let minov = hi - lo + 1;
            let maxov = s1.end.max(s2.end) - s1.start.min(s2.start) + 1;
            let delta = if with_delta {
                (maxov - minov)
                    .min(minov)
                    .min(s1.len() / 2)
                    .min(s2.len() / 2)
            } else {
                0
            };
            total += (minov + delta) as f64 / maxov as f64 * s1.len() as f64;
        }
    }
    total
}

/// F1 between two label sets; two empty sets score 1.
pub fn document_f1<L: Ord>(predicted: &BTreeSet<L>, observed: &BTreeSet<L>) -> f64 {
    if predicted.is_empty() && observed.is_empty() {
        return 1.0;
    }
    let common = predicted.intersection(observed).count();
    2.0 * common as f64 / (predicted.len() + observed.len()) as f64
}

/// Mean of per-document F1 scores.
pub fn f1_mean<L: Ord>(predicted: &[BTreeSet<L>], observed: &[BTreeSet<L>]) -> Result<f64> {
    if predicted.len() != observed.len() {
        return Err(Error::LengthMismatch {
            left: predicted.len(),
            right: observed.len(),
        });
    }
    if predicted.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let sum: f64 = predicted
        .iter()
        .zip(observed)
        .map(|(p, o)| document_f1(p, o))
        .sum();
    Ok(sum / predicted.len() as f64)
}

/// Rank-based (Mann-Whitney) area under the ROC curve; tied scores get
/// their mid-rank, so each tied positive/negative pair counts one half.
pub fn binary_auc(scores: &[f64], positive: &[bool]) -> Result<f64> {
    if scores.len() != positive.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: positive.len(),
        });
    }
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 {
        return Err(Error::DegenerateAuc("no positive examples"));
    }
    if n_neg == 0 {
        return Err(Error::DegenerateAuc("no negative examples"));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::NonFinite("AUC scores"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1..=j+1 share their mean
        let mid = (i + j) as f64 / 2.0 + 1.0;
        rank_sum_pos += mid * order[i..=j].iter().filter(|&&k| positive[k]).count() as f64;
        i = j + 1;
    }
    let p = n_pos as f64;
    Ok((rank_sum_pos - p * (p + 1.0) / 2.0) / (p * n_neg as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AucMode {
    /// Pools every (document, class) pair.
    Micro,
    /// Averages per-class AUCs, skipping classes without both outcomes.
    Macro,
}

/// Multilabel AUC over `scores[doc][class]` with matching truth flags.
pub fn auc(scores: &[Vec<f64>], truth: &[Vec<bool>], mode: AucMode) -> Result<f64> {
    if scores.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: truth.len(),
        });
    }
    let n_classes = scores.first().map_or(0, Vec::len);
    for (s, t) in scores.iter().zip(truth) {
        if s.len() != n_classes || t.len() != n_classes {
            return Err(Error::LengthMismatch {
                left: s.len(),
                right: t.len(),
            });
        }
    }
    match mode {
        AucMode::Micro => {
            let flat_scores: Vec<f64> = scores.iter().flatten().copied().collect();
            let flat_truth: Vec<bool> = truth.iter().flatten().copied().collect();
            binary_auc(&flat_scores, &flat_truth)
        }
        AucMode::Macro => {
            let mut per_class = Vec::new();
            for c in 0..n_classes {
                let s: Vec<f64> = scores.iter().map(|row| row[c]).collect();
                let t: Vec<bool> = truth.iter().map(|row| row[c]).collect();
                match binary_auc(&s, &t) {
                    Ok(a) => per_class.push(a),
                    Err(Error::DegenerateAuc(why)) => {
                        warn!("macro AUC skips class {c}: {why}");
                    }
                    Err(e) => return Err(e),
                }
            }
            if per_class.is_empty() {
                return Err(Error::DegenerateAuc(
                    "no class has both positives and negatives",
                ));
            }
            Ok(per_class.iter().sum::<f64>() / per_class.len() as f64)
        }
    }
}

/// Corpus-level scores for one run. Metrics not computed for the task are `None`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalReport {
    pub sov: Option<f64>,
    pub pppa: Option<f64>,
    pub f1_mean: Option<f64>,
    pub auc_micro: Option<f64>,
    pub auc_macro: Option<f64>,
    /// Optional `(document id, metric name, value)` rows.
    pub per_document: Vec<(String, &'static str, f64)>,
}

impl EvalReport {
    pub fn metrics(&self) -> Vec<(&'static str, f64)> {
        [
            ("SOV", self.sov),
            ("PPPA", self.pppa),
            ("F1_mean", self.f1_mean),
            ("AUC_mu", self.auc_micro),
            ("AUC_M", self.auc_macro),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.map(|v| (k, v)))
        .collect()
    }

    /// The `metric<TAB>value` block, optionally followed by per-document rows.
    pub fn to_text(&self, per_document: bool) -> String {
        let mut out = self.to_string();
        if per_document {
            for (id, metric, v) in &self.per_document {
                out.push_str(&format!("{id}\t{metric}\t{v:.6}\n"));
            }
        }
        out
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.metrics() {
            writeln!(f, "{k}\t{v:.6}")?;
        }
        Ok(())
    }
}

/// SOV and PPPA averaged over documents.
pub fn segmentation_report<L: PartialEq + Clone>(
    docs: &[(String, Vec<LabeledSegment<L>>, Vec<LabeledSegment<L>>)],
) -> Result<EvalReport> {
    if docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut report = EvalReport::default();
    let (mut sov_sum, mut pppa_sum) = (0.0, 0.0);
    for (id, observed, predicted) in docs {
        let n = observed.last().map_or(0, |s| s.end);
        let s = sov(observed, predicted, n)?;
        let p = pppa(&sentence_labeling(observed), &sentence_labeling(predicted))?;
        sov_sum += s;
        pppa_sum += p;
        report.per_document.push((id.clone(), "SOV", s));
        report.per_document.push((id.clone(), "PPPA", p));
    }
    report.sov = Some(sov_sum / docs.len() as f64);
    report.pppa = Some(pppa_sum / docs.len() as f64);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seg(start: usize, end: usize, l: char) -> LabeledSegment<char> {
        LabeledSegment::new(start, end, l)
    }

    fn set(ls: &[char]) -> BTreeSet<char> {
        ls.iter().copied().collect()
    }

    fn pair_count_auc(scores: &[f64], pos: &[bool]) -> f64 {
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for (i, &pi) in pos.iter().enumerate() {
            for (j, &pj) in pos.iter().enumerate() {
                if pi && !pj {
                    pairs += 1.0;
                    if scores[i] > scores[j] {
                        wins += 1.0;
                    } else if scores[i] == scores[j] {
                        wins += 0.5;
                    }
                }
            }
        }
        wins / pairs
    }

    #[test]
    fn pppa_examples() {
        assert_eq!(pppa(&['A', 'B'], &['A', 'B']).unwrap(), 1.0);
        assert_eq!(
            pppa(&['A', 'A', 'B', 'B'], &['A', 'B', 'B', 'B']).unwrap(),
            0.75
        );
        assert_eq!(pppa(&['A', 'A'], &['B', 'C']).unwrap(), 0.0);
        assert!(pppa(&['A'], &['A', 'B']).is_err());
    }

    #[test]
    fn sov_examples() {
        let obs = [seg(1, 4, 'A'), seg(5, 10, 'B')];
        assert_eq!(sov(&obs, &obs, 10).unwrap(), 1.0);
        let obs = [seg(1, 10, 'A')];
        let pred = [seg(1, 6, 'A'), seg(7, 10, 'B')];
        assert!((sov(&obs, &pred, 10).unwrap() - 0.9).abs() < 1e-15);
        let obs = [seg(1, 5, 'A'), seg(6, 10, 'B')];
        let pred = [seg(1, 5, 'B'), seg(6, 10, 'A')];
        assert_eq!(sov(&obs, &pred, 10).unwrap(), 0.0);
    }

    #[test]
    fn sov_rejects_non_tiling() {
        let good = [seg(1, 10, 'A')];
        assert!(sov(&good, &[seg(1, 4, 'A'), seg(6, 10, 'A')], 10).is_err());
        assert!(sov(&good, &[seg(1, 9, 'A')], 10).is_err());
        assert!(sov(&good, &[seg(2, 10, 'A')], 10).is_err());
    }

    #[test]
    fn sov_clamps_fragmented_overshoot() {
        // Many small same-label predictions inside one observed segment.
        let obs = [seg(1, 4, 'A')];
        let pred = [seg(1, 2, 'A'), seg(3, 4, 'A')];
        let unclamped = 2.0 * ((2 + 1) as f64 / 4.0 * 4.0) / 4.0;
        assert!(unclamped > 1.0);
        assert_eq!(sov(&obs, &pred, 4).unwrap(), 1.0);
    }

    #[test]
    fn f1_examples() {
        assert_eq!(document_f1(&set(&['A', 'B']), &set(&['A', 'B'])), 1.0);
        assert_eq!(document_f1(&set(&['A', 'B']), &set(&['A', 'C'])), 0.5);
        assert_eq!(document_f1(&set(&[]), &set(&['A'])), 0.0);
        assert_eq!(document_f1::<char>(&set(&[]), &set(&[])), 1.0);
        assert!(f1_mean(&[set(&['A'])], &[]).is_err());
    }

    #[test]
    fn auc_examples() {
        assert_eq!(binary_auc(&[0.9, 0.1], &[true, false]).unwrap(), 1.0);
        assert_eq!(
            binary_auc(&[0.3; 4], &[true, false, true, false]).unwrap(),
            0.5
        );
        let a = binary_auc(&[0.8, 0.4, 0.6, 0.2], &[true, true, false, false]).unwrap();
        assert_eq!(a, 0.75);
        assert_eq!(
            pair_count_auc(&[0.8, 0.4, 0.6, 0.2], &[true, true, false, false]),
            0.75
        );
        assert!(matches!(
            binary_auc(&[0.1], &[true]),
            Err(Error::DegenerateAuc(_))
        ));
    }

    #[test]
    fn micro_and_macro() {
        let scores = vec![vec![0.9, 0.2], vec![0.1, 0.8], vec![0.4, 0.3]];
        let truth = vec![vec![true, false], vec![false, true], vec![false, false]];
        assert_eq!(auc(&scores, &truth, AucMode::Macro).unwrap(), 1.0);
        let micro = auc(&scores, &truth, AucMode::Micro).unwrap();
        assert_eq!(
            micro,
            pair_count_auc(
                &[0.9, 0.2, 0.1, 0.8, 0.4, 0.3],
                &[true, false, false, true, false, false]
            )
        );
        // class 1 has no positives: macro skips it
        let truth = vec![vec![true, false], vec![false, false], vec![false, false]];
        assert_eq!(auc(&scores, &truth, AucMode::Macro).unwrap(), 1.0);
        let all_neg = vec![vec![false, false]; 3];
        assert!(auc(&scores, &all_neg, AucMode::Micro).is_err());
        assert!(auc(&scores, &all_neg, AucMode::Macro).is_err());
    }

    #[test]
    fn report_text() {
        let r = EvalReport {
            sov: Some(1.0),
            pppa: Some(0.5),
            ..Default::default()
        };
        assert_eq!(r.to_string(), "SOV\t1.000000\nPPPA\t0.500000\n");
    }

    proptest! {
        #[test]
        fn rank_auc_equals_pair_counting(
            data in proptest::collection::vec((0u8..6, any::<bool>()), 2..14)
        ) {
            let scores: Vec<f64> = data.iter().map(|&(s, _)| s as f64 / 5.0).collect();
            let pos: Vec<bool> = data.iter().map(|&(_, p)| p).collect();
            if pos.iter().any(|&p| p) && pos.iter().any(|&p| !p) {
                let a = binary_auc(&scores, &pos).unwrap();
                prop_assert!((a - pair_count_auc(&scores, &pos)).abs() < 1e-12);
            }
        }

        #[test]
        fn auc_flips_with_negated_scores(
            data in proptest::collection::vec((0.0f64..1.0, any::<bool>()), 2..30)
        ) {
            let scores: Vec<f64> = data.iter().map(|&(s, _)| s).collect();
            let neg: Vec<f64> = scores.iter().map(|s| -s).collect();
            let pos: Vec<bool> = data.iter().map(|&(_, p)| p).collect();
            let mut sorted = scores.clone();
            sorted.sort_by(f64::total_cmp);
            let distinct = sorted.windows(2).all(|w| w[0] != w[1]);
            if distinct && pos.iter().any(|&p| p) && pos.iter().any(|&p| !p) {
                let a = binary_auc(&scores, &pos).unwrap() + binary_auc(&neg, &pos).unwrap();
                prop_assert!((a - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn f1_mean_is_permutation_invariant(
            docs in proptest::collection::vec(
                (proptest::collection::btree_set(0u8..5, 0..4), proptest::collection::btree_set(0u8..5, 0..4)),
                1..10,
            ),
            rot in 0usize..10,
        ) {
            let (p, o): (Vec<_>, Vec<_>) = docs.iter().cloned().unzip();
            let mut p2 = p.clone();
            let mut o2 = o.clone();
            let r = rot % p.len();
            p2.rotate_left(r);
            o2.rotate_left(r);
            let a = f1_mean(&p, &o).unwrap();
            let b = f1_mean(&p2, &o2).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn sov_without_delta_never_exceeds_one(
            a in proptest::collection::vec((1usize..5, 0u8..3), 1..6),
            b in proptest::collection::vec((1usize..5, 0u8..3), 1..6),
        ) {
            let build = |spec: &[(usize, u8)]| {
                let mut out = Vec::new();
                let mut start = 1;
                for &(len, l) in spec {
                    out.push(LabeledSegment::new(start, start + len - 1, l));
                    start += len;
                }
                (out, start - 1)
            };
            let (obs, n1) = build(&a);
            let (mut pred, n2) = build(&b);
            // stretch the prediction's last segment so both tile the same range
            if n2 < n1 {
                pred.last_mut().unwrap().end = n1;
            } else if n2 > n1 {
                return Ok(());
            }
            let raw = overlap_sum(&obs, &pred, false) / n1 as f64;
            prop_assert!(raw <= 1.0 + 1e-12);
            let s = sov(&obs, &pred, n1).unwrap();
            prop_assert!((0.0..=1.0).contains(&s));
        }

        #[test]
        fn perfect_prediction_scores_one(lengths in proptest::collection::vec(1usize..5, 1..6)) {
            let mut segs = Vec::new();
            let mut start = 1;
            for (i, len) in lengths.iter().enumerate() {
                segs.push(LabeledSegment::new(start, start + len - 1, i % 2));
                start += len;
            }
            let n = start - 1;
            prop_assert_eq!(sov(&segs, &segs, n).unwrap(), 1.0);
            let lab = sentence_labeling(&segs);
            prop_assert_eq!(pppa(&lab, &lab).unwrap(), 1.0);
        }
    }
}
