use creditseg::classifier::{read_model, write_model, TrainConfig};
use creditseg::corpus::PrefixSums;
use creditseg::pipeline::{predict_corpus, train_seg_noisy, train_seg_refine, CandidateMode, PipelineConfig};
use creditseg::toy::{ToyConfig, ToyCorpus};

fn small_config(seed: u64) -> PipelineConfig {
    PipelineConfig {
        train: TrainConfig {
            hidden: 64,
            epochs: 30,
            ..Default::default()
        },
        rng_seed: seed,
        ..Default::default()
    }
}

#[test]
fn noisy_model_labels_whole_single_documents() {
    let toy = ToyCorpus::generate(&ToyConfig::separable(11)).unwrap();
    let cfg = PipelineConfig {
        rng_seed: 11,
        ..Default::default()
    };
    let (model, report) = train_seg_noisy(&toy.train, &toy.classes, toy.vocab.len(), &cfg).unwrap();
    assert_eq!(report.epoch_losses.len(), 100);
    for doc in &toy.test_singles {
        let x = PrefixSums::new(doc, toy.vocab.len()).unwrap().bow(1, doc.len()).unwrap();
        let probs = model.forward(&x).unwrap();
        let best = (0..model.n_classes())
            .max_by(|&a, &b| probs[a].total_cmp(&probs[b]))
            .unwrap();
        assert!(doc.labels.contains(&toy.classes[best]), "{}", doc.id);
    }
}

#[test]
fn equal_seeds_give_equal_models_and_predictions() {
    let toy = ToyCorpus::generate(&ToyConfig::overlapping(4)).unwrap();
    let docs: Vec<_> = toy.test.iter().map(|s| s.document.clone()).collect();
    let run = || {
        let out = train_seg_refine(&toy.train, &toy.classes, toy.vocab.len(), &small_config(4)).unwrap();
        let preds = predict_corpus(&out.model, &docs, CandidateMode::All, 0.55).unwrap();
        (out.model, preds)
    };
    let (m1, p1) = run();
    let (m2, p2) = run();
    assert_eq!(m1, m2);
    assert_eq!(p1, p2);

    let (other, _) = train_seg_noisy(&toy.train, &toy.classes, toy.vocab.len(), &small_config(5)).unwrap();
    assert_ne!(other, m1);
}

#[test]
fn saved_model_predicts_identically() {
    let toy = ToyCorpus::generate(&ToyConfig::separable(2)).unwrap();
    let (mut model, _) = train_seg_noisy(&toy.train, &toy.classes, toy.vocab.len(), &small_config(2)).unwrap();
    model.set_vocab_hash(toy.vocab.content_hash());
    let mut bytes = Vec::new();
    write_model(&mut bytes, &model).unwrap();
    let loaded = read_model(bytes.as_slice()).unwrap();
    assert_eq!(loaded, model);
    let docs: Vec<_> = toy.test.iter().map(|s| s.document.clone()).collect();
    assert_eq!(
        predict_corpus(&model, &docs, CandidateMode::All, 0.3).unwrap(),
        predict_corpus(&loaded, &docs, CandidateMode::All, 0.3).unwrap()
    );
}
