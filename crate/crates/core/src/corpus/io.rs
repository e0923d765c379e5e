//! Line-oriented file formats.
//!
//! Corpus records are `id<TAB>label1,label2<TAB>sentence1<US>sentence2...`
//! with `<US>` the 0x1F byte. Preprocessed sentences are space-separated
//! tokens. Synthetic sets append a fourth field `b0,b1,...,bu|l1,...,lu`.
//! A corpus may start with a `#vocab-hash<TAB>hex` line tying it to the
//! vocabulary it was built with; other lines starting with `#` are ignored.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use super::{
    parse_labels, split_sentences, Document, RawDocument, TokenDocument, TrueSegmentation,
    Vocabulary,
};
use crate::error::{Error, Result};

pub const UNIT_SEPARATOR: char = '\u{1f}';
const HASH_PREFIX: &str = "#vocab-hash\t";

/// Contents of a preprocessed corpus or synthetic set file.
#[derive(Debug, Clone, Default)]
pub struct CorpusFile {
    pub vocab_hash: Option<String>,
    pub documents: Vec<TokenDocument>,
    /// Ground truth per document, present only in synthetic set files.
    pub truths: Vec<Option<TrueSegmentation>>,
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn labels_field(doc: &Document<impl Sized>) -> String {
    doc.labels.iter().cloned().collect::<Vec<_>>().join(",")
}

fn record_line(doc: &TokenDocument) -> String {
    let sentences: Vec<String> = doc.sentences.iter().map(|s| s.join(" ")).collect();
    format!(
        "{}\t{}\t{}",
        doc.id,
        labels_field(doc),
        sentences.join(&UNIT_SEPARATOR.to_string())
    )
}

pub fn format_truth(truth: &TrueSegmentation) -> String {
    let b: Vec<String> = truth.boundaries.iter().map(|b| b.to_string()).collect();
    format!("{}|{}", b.join(","), truth.labels.join(","))
}

/// Writes a preprocessed corpus, optionally prefixed by a vocabulary hash line.
pub fn write_corpus<W: Write>(
    mut w: W,
    docs: &[TokenDocument],
    vocab_hash: Option<&str>,
) -> Result<()> {
    if let Some(h) = vocab_hash {
        writeln!(w, "{HASH_PREFIX}{h}")?;
    }
    for doc in docs {
        writeln!(w, "{}", record_line(doc))?;
    }
    Ok(())
}

/// Writes documents with their ground-truth segmentation field.
pub fn write_synthetic<W: Write>(
    mut w: W,
    docs: &[(TokenDocument, TrueSegmentation)],
    vocab_hash: Option<&str>,
) -> Result<()> {
    if let Some(h) = vocab_hash {
        writeln!(w, "{HASH_PREFIX}{h}")?;
    }
    for (doc, truth) in docs {
        writeln!(w, "{}\t{}", record_line(doc), format_truth(truth))?;
    }
    Ok(())
}

fn parse_truth(field: &str, n_sentences: usize) -> std::result::Result<TrueSegmentation, String> {
    let (b, l) = field
        .split_once('|')
        .ok_or_else(|| "truth field lacks '|'".to_string())?;
    let boundaries = b
        .split(',')
        .map(|x| x.trim().parse::<usize>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| format!("bad boundary: {e}"))?;
    let labels: Vec<String> = l.split(',').map(|s| s.trim().to_string()).collect();
    if boundaries.first() != Some(&0) || boundaries.last() != Some(&n_sentences) {
        return Err(format!(
            "boundaries must run from 0 to {n_sentences}, got {b}"
        ));
    }
    if boundaries.windows(2).any(|w| w[0] >= w[1]) {
        return Err("boundaries not strictly increasing".into());
    }
    if labels.len() + 1 != boundaries.len() || labels.iter().any(String::is_empty) {
        return Err("need exactly one label per segment".into());
    }
    Ok(TrueSegmentation { boundaries, labels })
}

/// Parses corpus text. `path` is only used for diagnostics.
pub fn parse_corpus(text: &str, path: &Path) -> Result<CorpusFile> {
    let mut out = CorpusFile::default();
    for (n, line) in text.lines().enumerate() {
        let lineno = n + 1;
        if let Some(h) = line.strip_prefix(HASH_PREFIX) {
            out.vocab_hash = Some(h.trim().to_string());
            continue;
        }
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if !(3..=4).contains(&fields.len()) {
            return Err(parse_error(
                path,
                lineno,
                format!(
                    "expected 3 or 4 tab-separated fields, found {}",
                    fields.len()
                ),
            ));
        }
        if fields[0].is_empty() {
            return Err(parse_error(path, lineno, "empty document id"));
        }
        let sentences: Vec<Vec<String>> = fields[2]
            .split(UNIT_SEPARATOR)
            .map(|s| s.split_whitespace().map(String::from).collect())
            .collect();
        let doc = Document::new(fields[0], sentences, parse_labels(fields[1]));
        let truth = match fields.get(3) {
            Some(f) => Some(parse_truth(f, doc.len()).map_err(|m| parse_error(path, lineno, m))?),
            None => None,
        };
        out.documents.push(doc);
        out.truths.push(truth);
    }
    Ok(out)
}

pub fn read_corpus(path: &Path) -> Result<CorpusFile> {
    parse_corpus(&fs::read_to_string(path)?, path)
}

/// Reads a raw corpus: `id<TAB>labels<TAB>text` per line. Every malformed
/// line is reported in the returned error.
pub fn read_raw_corpus(path: &Path) -> Result<Vec<RawDocument>> {
    let text = fs::read_to_string(path)?;
    let mut docs = Vec::new();
    let mut problems = String::new();
    let mut first_bad = 0;
    for (n, line) in text.lines().enumerate() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.splitn(3, '\t').collect();
        if fields.len() != 3 || fields[0].is_empty() {
            if first_bad == 0 {
                first_bad = n + 1;
            }
            let _ = write!(
                problems,
                "\n  line {}: expected `id<TAB>labels<TAB>text`",
                n + 1
            );
            continue;
        }
        docs.push(Document::new(
            fields[0],
            split_sentences(fields[2]),
            parse_labels(fields[1]),
        ));
    }
    if first_bad > 0 {
        return Err(parse_error(
            path,
            first_bad,
            format!("malformed records:{problems}"),
        ));
    }
    Ok(docs)
}

pub fn write_vocabulary<W: Write>(mut w: W, vocab: &Vocabulary) -> Result<()> {
    for (t, id, c) in vocab.iter() {
        writeln!(w, "{t}\t{id}\t{c}")?;
    }
    Ok(())
}

pub fn read_vocabulary(path: &Path) -> Result<Vocabulary> {
    let text = fs::read_to_string(path)?;
    let mut entries = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let parsed = match fields.as_slice() {
            [t, id, c] => id
                .parse::<u32>()
                .ok()
                .zip(c.parse::<u64>().ok())
                .map(|x| (t, x)),
            _ => None,
        };
        let Some((t, (id, c))) = parsed else {
            return Err(parse_error(
                path,
                n + 1,
                "expected `token<TAB>id<TAB>count`",
            ));
        };
        entries.push((t.to_string(), id, c));
    }
    let vocab = Vocabulary::from_counts(entries.iter().map(|(t, _, c)| (t.clone(), *c)));
    for (n, (t, id, _)) in entries.iter().enumerate() {
        if vocab.id(t) != Some(*id) {
            return Err(parse_error(
                path,
                n + 1,
                format!("id {id} for {t:?} is not its lexicographic position"),
            ));
        }
    }
    if vocab.len() != entries.len() {
        return Err(parse_error(path, 0, "duplicate tokens"));
    }
    Ok(vocab)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn tdoc(id: &str, labels: &[&str], sentences: &[&[&str]]) -> TokenDocument {
        Document::new(
            id,
            sentences
                .iter()
                .map(|s| s.iter().map(|t| t.to_string()).collect())
                .collect(),
            labels
                .iter()
                .map(|s| s.to_string())
                .collect::<BTreeSet<_>>(),
        )
    }

    #[test]
    fn corpus_round_trip_with_hash() {
        let docs = vec![
            tdoc("a", &["X", "Y"], &[&["foo", "bar"], &[], &["baz"]]),
            tdoc("b", &[], &[&["qux"]]),
        ];
        let mut buf = Vec::new();
        write_corpus(&mut buf, &docs, Some("00ff")).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("#vocab-hash\t00ff\n"));
        assert!(text.contains("a\tX,Y\tfoo bar\u{1f}\u{1f}baz\n"));
        let parsed = parse_corpus(&text, Path::new("mem")).unwrap();
        assert_eq!(parsed.vocab_hash.as_deref(), Some("00ff"));
        assert_eq!(parsed.documents, docs);
        assert_eq!(parsed.truths, vec![None, None]);
    }

    #[test]
    fn synthetic_round_trip() {
        let doc = tdoc("s", &["A", "B"], &[&["x"], &["y"], &["z"]]);
        let truth = TrueSegmentation {
            boundaries: vec![0, 1, 3],
            labels: vec!["A".into(), "B".into()],
        };
        let mut buf = Vec::new();
        write_synthetic(&mut buf, &[(doc.clone(), truth.clone())], None).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.ends_with("\t0,1,3|A,B\n"));
        let parsed = parse_corpus(&text, Path::new("mem")).unwrap();
        assert_eq!(parsed.documents, vec![doc]);
        assert_eq!(parsed.truths, vec![Some(truth)]);
    }

    #[test]
    fn malformed_truth_is_reported_with_line() {
        let text = "a\tA\tx\u{1f}y\t0,1|A\n";
        let err = parse_corpus(text, Path::new("f.tsv")).unwrap_err();
        assert!(err.to_string().starts_with("f.tsv:1:"), "{err}");
        let text = "a\tA,B\tx\u{1f}y\t0,2,1|A,B\n";
        assert!(parse_corpus(text, Path::new("f")).is_err());
        assert!(parse_corpus("only\tone\n", Path::new("f")).is_err());
    }

    #[test]
    fn vocabulary_round_trip() {
        let v = Vocabulary::from_counts([("b".to_string(), 5), ("a".to_string(), 7)]);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.tsv");
        write_vocabulary(fs::File::create(&p).unwrap(), &v).unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "a\t0\t7\nb\t1\t5\n");
        assert_eq!(read_vocabulary(&p).unwrap(), v);
        fs::write(&p, "a\t1\t7\nb\t0\t5\n").unwrap();
        assert!(read_vocabulary(&p).is_err());
    }

    #[test]
    fn raw_corpus_reports_every_bad_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("raw.tsv");
        fs::write(&p, "ok\tA\tOne. Two.\nbad line\nalso bad\n").unwrap();
        let err = read_raw_corpus(&p).unwrap_err().to_string();
        assert!(err.contains("line 2") && err.contains("line 3"), "{err}");
        fs::write(&p, "ok\tA,B\tOne. Two!\n").unwrap();
        let docs = read_raw_corpus(&p).unwrap();
        assert_eq!(docs[0].sentences, vec!["One", "Two"]);
        assert_eq!(docs[0].labels.len(), 2);
    }
}
