use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use defx::tagger::{forward_backward, neg_log_likelihood_and_gradient, viterbi_decode};
use defx::{CrfModel, TagLabel, TokenFeatures};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DIM: usize = 2000;

fn random_case(len: usize) -> (CrfModel, TokenFeatures, Vec<TagLabel>) {
    let mut rng = ChaCha8Rng::seed_from_u64(len as u64);
    let weights = (0..CrfModel::param_count(DIM))
        .map(|_| rng.gen_range(-0.5..0.5))
        .collect();
    let model = CrfModel::from_weights(DIM, "bench", weights).unwrap();
    let tokens = (0..len)
        .map(|_| {
            let mut f: Vec<u32> = (0..30).map(|_| rng.gen_range(0..DIM as u32)).collect();
            f.sort_unstable();
            f.dedup();
            f
        })
        .collect();
    let pooled = (0..60).map(|_| rng.gen_range(0..DIM as u32)).collect();
    (
        model,
        TokenFeatures { tokens, pooled },
        vec![TagLabel::O; len],
    )
}

fn bench_crf(c: &mut Criterion) {
    let mut g = c.benchmark_group("crf");
    for len in [10usize, 40, 100] {
        let (m, x, gold) = random_case(len);
        g.bench_with_input(BenchmarkId::new("forward_backward", len), &len, |b, _| {
            b.iter(|| forward_backward(black_box(&m), black_box(&x)).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("viterbi", len), &len, |b, _| {
            b.iter(|| viterbi_decode(black_box(&m), black_box(&x), true).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("loss_and_gradient", len), &len, |b, _| {
            b.iter(|| {
                neg_log_likelihood_and_gradient(
                    black_box(&m),
                    black_box(&x),
                    &gold,
                    false,
                    1.0,
                    1e-4,
                )
                .unwrap()
            })
        });
    }
    g.finish();
}

criterion_group!(benches, bench_crf);
criterion_main!(benches);
