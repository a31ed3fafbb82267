use defx::corpus::{split_corpus, SplitConfig, SplitMode};
use defx::encode::{EncoderConfig, SparseEncoder};
use defx::eval::evaluate;
use defx::synthetic::{generate, SyntheticConfig};
use defx::tagger::{predict, train};
use defx::targeting::expand_targets;
use defx::{TargetSample, TrainConfig};

fn expand(s: &[defx::AnnotatedSentence]) -> Vec<TargetSample> {
    s.iter().flat_map(expand_targets).collect()
}

#[test]
fn synthetic_corpus_is_learnable() {
    let corpus = generate(&SyntheticConfig::default());
    let split = split_corpus(
        &corpus,
        &SplitConfig {
            mode: SplitMode::ByPaper,
            seed: 7,
            ..SplitConfig::default()
        },
    )
    .unwrap();
    let (tr, dev, test) = (
        expand(&split.train),
        expand(&split.dev),
        expand(&split.test),
    );
    let enc = SparseEncoder::fit(&tr, 1, EncoderConfig::default()).unwrap();
    let report = train(&tr, &dev, &enc, &TrainConfig::default()).unwrap();
    // the objective must fall from the first epoch to the selected one
    let first = report.history[0].objective;
    let best = report.history[report.best_epoch - 1].objective;
    assert!(best < first, "{first} -> {best}");
    let preds = predict(&report.model, &test, &enc, false).unwrap();
    let gold: Vec<_> = test.iter().map(|s| s.labels.clone().unwrap()).collect();
    let pred: Vec<_> = preds.into_iter().map(|p| p.labels).collect();
    let counts: Vec<_> = test.iter().map(|s| s.symbol_count()).collect();
    let r = evaluate(&gold, &pred, &counts).unwrap();
    assert!(r.macro_f1 >= 0.95, "{}", r.to_table());
}
