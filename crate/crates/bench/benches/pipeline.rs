use criterion::{criterion_group, criterion_main, Criterion};
use defx::encode::{EncoderConfig, SparseEncoder, TokenEncoder};
use defx::tagger::{predict, train};
use defx::TrainConfig;
use defx_bench::{encoded, samples};

fn bench_pipeline(c: &mut Criterion) {
    let s = samples(400);
    c.bench_function("fit_dictionary_400", |b| {
        b.iter(|| SparseEncoder::fit(&s, 1, EncoderConfig::default()).unwrap())
    });

    let (s, enc, _) = encoded(400);
    c.bench_function("encode_400", |b| {
        b.iter(|| s.iter().map(|t| enc.encode(t).unwrap()).collect::<Vec<_>>())
    });

    let config = TrainConfig {
        epochs: 1,
        ..TrainConfig::default()
    };
    let mut g = c.benchmark_group("train");
    g.sample_size(10);
    g.bench_function("one_epoch_400", |b| {
        b.iter(|| train(&s, &[], &enc, &config).unwrap())
    });
    g.finish();

    let model = train(&s, &[], &enc, &config).unwrap().model;
    c.bench_function("predict_400", |b| {
        b.iter(|| predict(&model, &s, &enc, false).unwrap())
    });
}

criterion_group!(benches, bench_pipeline);
criterion_main!(benches);
