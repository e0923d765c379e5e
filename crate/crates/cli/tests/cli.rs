use std::ffi::OsStr;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const TOPICS: [(&str, [&str; 8]); 3] = [
    (
        "sports",
        ["football", "goalkeeper", "stadium", "referee", "striker", "tournament", "penalty", "coach"],
    ),
    (
        "cooking",
        ["recipe", "oven", "flour", "butter", "garlic", "kitchen", "simmer", "pastry"],
    ),
    (
        "space",
        ["rocket", "planet", "orbit", "astronaut", "galaxy", "telescope", "comet", "satellite"],
    ),
];

fn run<S: AsRef<OsStr>>(args: &[S]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_creditseg"))
        .args(args)
        .env("RUST_LOG", "info")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn ok<S: AsRef<OsStr> + std::fmt::Debug>(args: &[S]) -> Output {
    let o = run(args);
    assert!(o.status.success(), "{args:?} failed: {}", stderr(&o));
    o
}

fn sentence(topic: usize, k: usize) -> String {
    let words = TOPICS[topic].1;
    (0..6)
        .map(|i| words[(k * 7 + i * 3 + k / 3) % words.len()])
        .collect::<Vec<_>>()
        .join(" ")
}

/// Ten single-label documents per topic plus mixed documents.
fn raw_corpus() -> String {
    let mut out = String::new();
    let mut k = 0;
    for d in 0..30 {
        let t = d % 3;
        let text: Vec<String> = (0..5)
            .map(|_| {
                k += 1;
                sentence(t, k)
            })
            .collect();
        out.push_str(&format!("s{d}\t{}\t{}.\n", TOPICS[t].0, text.join(". ")));
    }
    for d in 0..15 {
        let (a, b) = (d % 3, (d + 1) % 3);
        let text: Vec<String> = (0..6)
            .map(|i| {
                k += 1;
                sentence(if i < 3 { a } else { b }, k)
            })
            .collect();
        out.push_str(&format!(
            "m{d}\t{},{}\t{}.\n",
            TOPICS[a].0,
            TOPICS[b].0,
            text.join(". ")
        ));
    }
    out
}

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        let w = Self {
            dir: TempDir::new().unwrap(),
        };
        fs::write(w.path("raw.tsv"), raw_corpus()).unwrap();
        w
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn s(&self, name: &str) -> String {
        self.path(name).to_string_lossy().into_owned()
    }

    fn preprocess(&self) {
        ok(&[
            "preprocess",
            "--input",
            &self.s("raw.tsv"),
            "--out",
            &self.s("corpus.tsv"),
            "--vocab-out",
            &self.s("vocab.tsv"),
        ]);
    }

    fn train(&self, method: &str, out: &str) -> Output {
        ok(&[
            "train",
            "--corpus",
            &self.s("corpus.tsv"),
            "--vocab",
            &self.s("vocab.tsv"),
            "--method",
            method,
            "--alpha",
            "0.55",
            "--epochs",
            "20",
            "--hidden",
            "16",
            "--seed",
            "3",
            "--out",
            &self.s(out),
        ])
    }
}

fn read(p: &Path) -> Vec<u8> {
    fs::read(p).unwrap()
}

#[test]
fn end_to_end() {
    let w = Workspace::new();
    w.preprocess();
    ok(&[
        "synthesize",
        "--singles",
        &w.s("corpus.tsv"),
        "--multis",
        &w.s("corpus.tsv"),
        "--n",
        "10",
        "--seed",
        "1",
        "--out",
        &w.s("synth.tsv"),
    ]);
    w.train("seg-noisy", "model.bin");
    ok(&[
        "segment",
        "--model",
        &w.s("model.bin"),
        "--corpus",
        &w.s("synth.tsv"),
        "--vocab",
        &w.s("vocab.tsv"),
        "--alpha",
        "0.6",
        "--out",
        &w.s("segments.txt"),
        "--predictions",
        &w.s("preds.tsv"),
    ]);
    let listing = fs::read_to_string(w.path("segments.txt")).unwrap();
    assert_eq!(listing.matches("objective\t").count(), 10);
    assert!(listing.starts_with("# synthetic-0\n1\t"));

    let seg = ok(&[
        "evaluate",
        "--predictions",
        &w.s("preds.tsv"),
        "--truth",
        &w.s("synth.tsv"),
        "--task",
        "segmentation",
    ]);
    let text = String::from_utf8(seg.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("SOV\t") && lines[1].starts_with("PPPA\t"));

    let cls = ok(&[
        "evaluate",
        "--predictions",
        &w.s("preds.tsv"),
        "--truth",
        &w.s("synth.tsv"),
        "--task",
        "classification",
        "--per-document",
    ]);
    let text = String::from_utf8(cls.stdout).unwrap();
    assert!(text.starts_with("F1_mean\t"));
    assert!(text.contains("\nAUC_mu\t") && text.contains("\nAUC_M\t"));
    assert!(text.contains("synthetic-0\tF1\t"));
}

#[test]
fn preprocess_is_deterministic_and_reports_length_rule() {
    let w = Workspace::new();
    let mut raw = raw_corpus();
    raw.push_str("short\tsports\tfootball coach. football referee stadium striker coach.\n");
    fs::write(w.path("raw.tsv"), raw).unwrap();
    let first = ok(&[
        "preprocess",
        "--input",
        &w.s("raw.tsv"),
        "--out",
        &w.s("a.tsv"),
        "--vocab-out",
        &w.s("va.tsv"),
    ]);
    ok(&[
        "preprocess",
        "--input",
        &w.s("raw.tsv"),
        "--out",
        &w.s("b.tsv"),
        "--vocab-out",
        &w.s("vb.tsv"),
    ]);
    assert_eq!(read(&w.path("a.tsv")), read(&w.path("b.tsv")));
    assert_eq!(read(&w.path("va.tsv")), read(&w.path("vb.tsv")));
    assert!(stderr(&first).contains("1 dropped by the 4-10 word rule"), "{}", stderr(&first));
}

#[test]
fn all_rare_tokens_is_an_error() {
    let w = Workspace::new();
    fs::write(
        w.path("raw.tsv"),
        "a\tx\talpha beta gamma delta epsilon.\nb\ty\tzeta theta iota kappa lambda.\n",
    )
    .unwrap();
    let o = run(&[
        "preprocess",
        "--input",
        &w.s("raw.tsv"),
        "--out",
        &w.s("c.tsv"),
        "--vocab-out",
        &w.s("v.tsv"),
    ]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("empty vocabulary"));
}

#[test]
fn garbled_raw_lines_are_reported() {
    let w = Workspace::new();
    fs::write(w.path("raw.tsv"), "ok\tx\tsome text here.\nno tabs at all\n\talso bad\n").unwrap();
    let o = run(&[
        "preprocess",
        "--input",
        &w.s("raw.tsv"),
        "--out",
        &w.s("c.tsv"),
        "--vocab-out",
        &w.s("v.tsv"),
    ]);
    assert!(!o.status.success());
    let e = stderr(&o);
    assert!(e.contains("line 2") && e.contains("line 3"), "{e}");
}

#[test]
fn training_is_deterministic_and_refine_logs_fine_tunes() {
    let w = Workspace::new();
    w.preprocess();
    let noisy = w.train("seg-noisy", "a.bin");
    w.train("seg-noisy", "b.bin");
    assert_eq!(read(&w.path("a.bin")), read(&w.path("b.bin")));
    assert!(!stderr(&noisy).contains("fine-tune"));

    let refine = w.train("seg-refine", "r.bin");
    let log = stderr(&refine);
    for k in 1..=3 {
        assert!(log.contains(&format!("fine-tune {k}:")), "{log}");
    }
    assert!(!log.contains("fine-tune 4"));
}

#[test]
fn vocabulary_mismatch_is_rejected() {
    let w = Workspace::new();
    w.preprocess();
    w.train("seg-noisy", "model.bin");
    let other: String = raw_corpus().lines().take(20).map(|l| format!("{l}\n")).collect();
    fs::write(w.path("other.tsv"), other).unwrap();
    ok(&[
        "preprocess",
        "--input",
        &w.s("other.tsv"),
        "--out",
        &w.s("other_corpus.tsv"),
        "--vocab-out",
        &w.s("other_vocab.tsv"),
    ]);
    let o = run(&[
        "segment",
        "--model",
        &w.s("model.bin"),
        "--corpus",
        &w.s("other_corpus.tsv"),
        "--vocab",
        &w.s("other_vocab.tsv"),
    ]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("model/corpus vocabulary mismatch"));
}

#[test]
fn candidate_modes() {
    let w = Workspace::new();
    w.preprocess();
    w.train("seg-noisy", "model.bin");
    let corpus = fs::read_to_string(w.path("corpus.tsv")).unwrap();
    let (hash, first) = corpus.split_once('\n').unwrap();
    let record = first.lines().next().unwrap();
    let fields: Vec<&str> = record.split('\t').collect();

    // labeled document: doc-labels restricts segments to its own labels
    fs::write(w.path("one.tsv"), format!("{hash}\n{record}\n")).unwrap();
    let o = ok(&[
        "segment",
        "--model",
        &w.s("model.bin"),
        "--corpus",
        &w.s("one.tsv"),
        "--vocab",
        &w.s("vocab.tsv"),
        "--candidates",
        "doc-labels",
    ]);
    let out = String::from_utf8(o.stdout).unwrap();
    for line in out.lines().filter(|l| !l.starts_with('#') && !l.starts_with("objective")) {
        assert_eq!(line.split('\t').nth(2), Some(fields[1]));
    }

    fs::write(w.path("unlabeled.tsv"), format!("{hash}\nu1\t\t{}\n", fields[2])).unwrap();
    let args = |c: &'static str| {
        vec![
            "segment".to_string(),
            "--model".into(),
            w.s("model.bin"),
            "--corpus".into(),
            w.s("unlabeled.tsv"),
            "--vocab".into(),
            w.s("vocab.tsv"),
            "--candidates".into(),
            c.into(),
        ]
    };
    let o = run(&args("doc-labels"));
    assert!(!o.status.success());
    assert!(stderr(&o).contains("u1"));
    ok(&args("all"));

    fs::write(w.path("empty.tsv"), "").unwrap();
    let o = ok(&[
        "segment",
        "--model",
        &w.s("model.bin"),
        "--corpus",
        &w.s("empty.tsv"),
        "--vocab",
        &w.s("vocab.tsv"),
    ]);
    assert!(o.stdout.is_empty());
}

#[test]
fn evaluating_truth_against_itself_is_perfect() {
    let w = Workspace::new();
    w.preprocess();
    ok(&[
        "synthesize",
        "--singles",
        &w.s("corpus.tsv"),
        "--multis",
        &w.s("corpus.tsv"),
        "--n",
        "6",
        "--out",
        &w.s("synth.tsv"),
    ]);
    let synth = fs::read_to_string(w.path("synth.tsv")).unwrap();
    let classes = "cooking,space,sports";
    let mut preds = String::new();
    for line in synth.lines().filter(|l| !l.starts_with('#')) {
        let f: Vec<&str> = line.split('\t').collect();
        let scores: Vec<String> = classes
            .split(',')
            .map(|c| format!("{c}:{}", if f[1].split(',').any(|l| l == c) { "0.9" } else { "0.1" }))
            .collect();
        preds.push_str(&format!("{}\t{}\t{}\t{}\n", f[0], f[1], f[3], scores.join(",")));
    }
    fs::write(w.path("preds.tsv"), &preds).unwrap();
    let args = |task: &'static str, p: &str| {
        vec![
            "evaluate".to_string(),
            "--predictions".into(),
            w.s(p),
            "--truth".into(),
            w.s("synth.tsv"),
            "--task".into(),
            task.into(),
        ]
    };
    let o = ok(&args("segmentation", "preds.tsv"));
    assert_eq!(String::from_utf8(o.stdout).unwrap(), "SOV\t1.000000\nPPPA\t1.000000\n");
    let o = ok(&args("classification", "preds.tsv"));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("F1_mean\t1.000000\n"), "{text}");

    // drop the first prediction: the missing id is named
    let missing: String = preds.lines().skip(1).map(|l| format!("{l}\n")).collect();
    fs::write(w.path("missing.tsv"), missing).unwrap();
    let o = run(&args("segmentation", "missing.tsv"));
    assert!(!o.status.success());
    assert!(stderr(&o).contains("synthetic-0"), "{}", stderr(&o));
}

#[test]
fn config_file_and_flag_precedence() {
    let w = Workspace::new();
    w.preprocess();
    fs::write(
        w.path("run.conf"),
        format!(
            "corpus = {}\nvocab = {}\nmethod = seg-noisy\nepochs = 4\nhidden = 8\nout = {}\n",
            w.s("corpus.tsv"),
            w.s("vocab.tsv"),
            w.s("from_config.bin")
        ),
    )
    .unwrap();
    let o = ok(&["train", "--config", &w.s("run.conf")]);
    assert!(stderr(&o).contains("4 epochs"), "{}", stderr(&o));
    assert!(w.path("from_config.bin").exists());

    let o = ok(&["train", "--config", &w.s("run.conf"), "--epochs", "2", "--out", &w.s("flag.bin")]);
    assert!(stderr(&o).contains("2 epochs"));
    assert!(w.path("flag.bin").exists());

    let o = run(&[
        "train",
        "--config",
        &w.s("run.conf"),
        "--method",
        "bogus",
        "--dropout",
        "1.5",
        "--alpha=-1",
    ]);
    assert!(!o.status.success());
    let e = stderr(&o);
    assert!(e.contains("method") && e.contains("dropout") && e.contains("alpha"), "{e}");

    fs::write(w.path("bad.conf"), "nonsense_key = 1\n").unwrap();
    let o = run(&["train", "--config", &w.s("bad.conf")]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("unknown key"));
}
