use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use tweetopic_bench::{raw_tweets, synthetic_corpus};
use tweetopic_core::classical::{mnb_fit, mnb_predict};
use tweetopic_core::corpus::stratified_folds;
use tweetopic_core::evaluate::paired_ttest;
use tweetopic_core::features::{build_vocabulary, bow_vector, tfidf_matrix};
use tweetopic_core::finetune::{EncoderBackend, HashedEncoder};
use tweetopic_core::preprocess::Pipeline;

fn bench_preprocess(c: &mut Criterion) {
    let pipeline = Pipeline::default_pipeline();
    let tweets = raw_tweets(500, 1);
    let mut group = c.benchmark_group("preprocess");
    group.throughput(Throughput::Elements(tweets.len() as u64));
    group.bench_function("default_pipeline_500_tweets", |b| {
        b.iter(|| {
            for t in &tweets {
                black_box(pipeline.preprocess(black_box(t)));
            }
        })
    });
    group.finish();
}

fn bench_vectorize(c: &mut Criterion) {
    let corpus = synthetic_corpus(100, 2);
    let pipeline = Pipeline::default_pipeline();
    let docs: Vec<_> = corpus
        .tweets()
        .iter()
        .map(|t| pipeline.preprocess(&t.text))
        .collect();
    let vocab = build_vocabulary(&docs, 1).unwrap();

    let mut group = c.benchmark_group("features");
    group.throughput(Throughput::Elements(docs.len() as u64));
    group.bench_function("bow_600_docs", |b| {
        b.iter(|| {
            for d in &docs {
                black_box(bow_vector(black_box(d), &vocab));
            }
        })
    });
    group.bench_function("tfidf_600_docs", |b| {
        b.iter(|| black_box(tfidf_matrix(black_box(&docs), &vocab).unwrap()))
    });
    group.finish();
}

fn bench_mnb(c: &mut Criterion) {
    let corpus = synthetic_corpus(100, 3);
    let pipeline = Pipeline::default_pipeline();
    let docs: Vec<_> = corpus
        .tweets()
        .iter()
        .map(|t| pipeline.preprocess(&t.text))
        .collect();
    let vocab = build_vocabulary(&docs, 1).unwrap();
    let x: Vec<_> = docs.iter().map(|d| bow_vector(d, &vocab)).collect();
    let y = corpus.class_indices();

    c.bench_function("mnb_fit_600_docs", |b| {
        b.iter(|| black_box(mnb_fit(black_box(&x), &y, 6, 1.0, true).unwrap()))
    });
    let model = mnb_fit(&x, &y, 6, 1.0, true).unwrap();
    c.bench_function("mnb_predict_600_docs", |b| {
        b.iter(|| {
            for xi in &x {
                black_box(mnb_predict(&model, black_box(xi)).unwrap());
            }
        })
    });
}

fn bench_folds_and_ttest(c: &mut Criterion) {
    let mut group = c.benchmark_group("harness");
    for per_class in [50usize, 200] {
        let corpus = synthetic_corpus(per_class, 4);
        group.bench_with_input(
            BenchmarkId::new("stratified_folds_k5", corpus.len()),
            &corpus,
            |b, corpus| b.iter(|| black_box(stratified_folds(black_box(corpus), 5, 42).unwrap())),
        );
    }
    let a = [0.91, 0.89, 0.93, 0.9, 0.92];
    let b_accs = [0.85, 0.84, 0.88, 0.86, 0.87];
    group.bench_function("paired_ttest_k5", |b| {
        b.iter(|| black_box(paired_ttest(black_box(&a), black_box(&b_accs)).unwrap()))
    });
    group.finish();
}

fn bench_stub_encode(c: &mut Criterion) {
    let encoder = HashedEncoder::stub(32, 7);
    let texts = raw_tweets(200, 5);
    let mut group = c.benchmark_group("stf");
    group.throughput(Throughput::Elements(texts.len() as u64));
    group.bench_function("stub_encode_200_texts", |b| {
        b.iter(|| {
            for t in &texts {
                black_box(encoder.encode(black_box(t)));
            }
        })
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_preprocess,
    bench_vectorize,
    bench_mnb,
    bench_folds_and_ttest,
    bench_stub_encode
);
criterion_main!(benches);
