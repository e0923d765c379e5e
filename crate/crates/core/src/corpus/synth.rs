use std::collections::{BTreeSet, HashSet};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Document;
use crate::error::{Error, Result};
use crate::metrics::LabeledSegment;

/// Draws attempted per synthetic document before giving up.
pub const MAX_DRAWS: usize = 1000;

/// Ground-truth segmentation of a synthetic document: boundaries
/// `0 = b0 < b1 < ... < bu = d_q` and one label per segment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrueSegmentation {
    pub boundaries: Vec<usize>,
    pub labels: Vec<String>,
}

impl TrueSegmentation {
    /// Segments as 1-based inclusive ranges.
    pub fn segments(&self) -> Vec<LabeledSegment<String>> {
        self.boundaries
            .windows(2)
            .zip(&self.labels)
            .map(|(w, l)| LabeledSegment::new(w[0] + 1, w[1], l.clone()))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticDocument<S> {
    pub document: Document<S>,
    pub truth: TrueSegmentation,
    pub source_ids: Vec<String>,
}

/// Builds `n_docs` multilabel documents by concatenating 2 or 3 randomly
/// chosen single-label documents with pairwise distinct labels. A
/// combination is kept only if its label set also occurs among `multis`.
pub fn synthesize_test_set<S: Clone>(
    singles: &[Document<S>],
    multis: &[Document<S>],
    n_docs: usize,
    rng_seed: u64,
) -> Result<Vec<SyntheticDocument<S>>> {
    let singles: Vec<&Document<S>> = singles.iter().filter(|d| d.labels.len() == 1).collect();
    let admissible: HashSet<&BTreeSet<String>> = multis
        .iter()
        .map(|d| &d.labels)
        .filter(|l| l.len() >= 2)
        .collect();
    if singles.is_empty() || admissible.is_empty() {
        return Err(Error::EmptyCorpus);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut out = Vec::with_capacity(n_docs);
    for n in 0..n_docs {
        let mut built = None;
        for _ in 0..MAX_DRAWS {
            let k = rng.gen_range(2..=3);
            if singles.len() < k {
                continue;
            }
            let picks: Vec<&Document<S>> = index::sample(&mut rng, singles.len(), k)
                .into_iter()
                .map(|i| singles[i])
                .collect();
            let labels: BTreeSet<String> = picks
                .iter()
                .flat_map(|d| d.labels.iter().cloned())
                .collect();
            if labels.len() == k && admissible.contains(&labels) {
                built = Some(merge(format!("synthetic-{n}"), &picks, labels));
                break;
            }
        }
        match built {
            Some(doc) => out.push(doc),
            None => {
                let mut sets: Vec<String> = admissible
                    .iter()
                    .map(|s| format!("{{{}}}", s.iter().cloned().collect::<Vec<_>>().join(",")))
                    .collect();
                sets.sort();
                return Err(Error::NoAdmissibleCombination {
                    retries: MAX_DRAWS,
                    admissible: sets.join(" "),
                });
            }
        }
    }
    Ok(out)
}

fn merge<S: Clone>(
    id: String,
    sources: &[&Document<S>],
    labels: BTreeSet<String>,
) -> SyntheticDocument<S> {
    let mut sentences = Vec::new();
    let mut boundaries = vec![0];
    let mut segment_labels = Vec::new();
    for src in sources {
        sentences.extend(src.sentences.iter().cloned());
        boundaries.push(sentences.len());
        segment_labels.push(src.labels.iter().next().cloned().expect("single label"));
    }
    SyntheticDocument {
        document: Document::new(id, sentences, labels),
        truth: TrueSegmentation {
            boundaries,
            labels: segment_labels,
        },
        source_ids: sources.iter().map(|d| d.id.clone()).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(ls: &[&str]) -> BTreeSet<String> {
        ls.iter().map(|s| s.to_string()).collect()
    }

    fn single(id: &str, label: &str, n: usize) -> Document<String> {
        Document::new(
            id,
            (0..n).map(|i| format!("{id}-{i}")).collect(),
            labels(&[label]),
        )
    }

    #[test]
    fn comedy_scifi_merge() {
        let singles = vec![single("c", "Comedy", 5), single("s", "SciFi", 7)];
        let multis = vec![Document::new("m", vec![], labels(&["Comedy", "SciFi"]))];
        let out = synthesize_test_set(&singles, &multis, 4, 1).unwrap();
        for syn in &out {
            assert_eq!(syn.document.len(), 12);
            assert_eq!(syn.document.labels, labels(&["Comedy", "SciFi"]));
            let b = &syn.truth.boundaries;
            assert!(b == &vec![0, 5, 12] || b == &vec![0, 7, 12]);
            let expected_first = if b[1] == 5 { "Comedy" } else { "SciFi" };
            assert_eq!(syn.truth.labels[0], expected_first);
            let concat: Vec<String> = syn
                .source_ids
                .iter()
                .flat_map(|id| {
                    singles
                        .iter()
                        .find(|d| &d.id == id)
                        .unwrap()
                        .sentences
                        .clone()
                })
                .collect();
            assert_eq!(concat, syn.document.sentences);
        }
    }

    #[test]
    fn inadmissible_label_sets_are_skipped() {
        let singles = vec![
            single("a", "A", 2),
            single("b", "B", 2),
            single("c", "C", 2),
        ];
        let multis = vec![Document::new("m", vec![], labels(&["A", "C"]))];
        let out = synthesize_test_set(&singles, &multis, 20, 3).unwrap();
        for syn in out {
            assert_eq!(syn.document.labels, labels(&["A", "C"]));
        }
    }

    #[test]
    fn no_admissible_combination() {
        let singles = vec![single("a", "A", 2), single("b", "B", 2)];
        let multis = vec![Document::new("m", vec![], labels(&["A", "Z"]))];
        let err = synthesize_test_set(&singles, &multis, 1, 0).unwrap_err();
        assert!(err.to_string().contains("{A,Z}"), "{err}");
    }

    #[test]
    fn seeded_determinism() {
        let singles: Vec<_> = (0..10)
            .map(|i| single(&format!("d{i}"), ["A", "B", "C"][i % 3], 2 + i % 4))
            .collect();
        let multis = vec![
            Document::new("m1", vec![], labels(&["A", "B"])),
            Document::new("m2", vec![], labels(&["A", "B", "C"])),
        ];
        let a = synthesize_test_set(&singles, &multis, 15, 9).unwrap();
        let b = synthesize_test_set(&singles, &multis, 15, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().any(|s| s.truth.labels.len() == 3));
    }
}
