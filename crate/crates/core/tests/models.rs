use clickbait::corpus::{split_by_source, SplitManifest};
use clickbait::eval::{accuracy, labeled_pairs, macro_f1, mcnemar, prf1, read_predictions};
use clickbait::neural::{train_bilstm, BiLstmConfig};
use clickbait::synth::{generate, SynthConfig, SYNTH_SOURCES};
use clickbait::Label;
use std::path::Path;

#[test]
fn bilstm_generalizes_on_disjoint_vocabularies() {
    let corpus = generate(&SynthConfig {
        articles: 400,
        ..Default::default()
    })
    .unwrap();
    let manifest = SplitManifest::new(SYNTH_SOURCES[..4].iter().copied(), SYNTH_SOURCES[4..].iter().copied());
    let (train, test) = split_by_source(&corpus, &manifest).unwrap();
    let (model, report) = train_bilstm(&train, &BiLstmConfig::desk()).unwrap();
    assert!(report.epoch_losses.last().unwrap() < &report.epoch_losses[0]);
    let preds: Vec<Label> = model
        .predict(test.articles())
        .unwrap()
        .iter()
        .map(|s| s.label)
        .collect();
    let acc = accuracy(&preds, &test.labels().unwrap()).unwrap();
    assert!(acc >= 0.95, "held-out accuracy {acc}");
}

#[test]
fn shipped_prediction_fixtures_match_reported_scores() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let contrastive = read_predictions(&dir.join("contrastive_test_predictions.tsv")).unwrap();
    let finetuned = read_predictions(&dir.join("finetuned_test_predictions.tsv")).unwrap();
    assert_eq!(contrastive.len(), 1507);
    let (preds, golds) = labeled_pairs(&contrastive).unwrap();
    let cb = prf1(&preds, &golds, Label::Clickbait).unwrap();
    assert!((cb.f1 - 0.8852).abs() < 5e-5, "{cb:?}");
    assert!((macro_f1(&preds, &golds).unwrap() - 0.9199).abs() < 5e-5);
    let (other, _) = labeled_pairs(&finetuned).unwrap();
    let m = mcnemar(&preds, &other, &golds).unwrap();
    assert!(m.p_value <= 0.001, "{m:?}");
}
