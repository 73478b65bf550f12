use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use discode_bench::{planted, random_counts};
use discode_core::coherence::{coherence_cv, coherence_umass};
use discode_core::embed::fit_kmeans;
use discode_core::lda::{build_eta, fit_lda, lda_topics, LdaParams};
use discode_core::lsa::{fit_lsa_with, LsaConfig, SvdMethod};
use discode_core::synthetic::gaussian_blobs;

fn gibbs(c: &mut Criterion) {
    let corpus = planted(200, 1);
    let eta = build_eta(None, &corpus.vocab, 5).unwrap();
    let params = LdaParams {
        iterations: 50,
        seed: 7,
        ..Default::default()
    };
    c.bench_function("gibbs_50_sweeps_200x50", |b| {
        b.iter(|| fit_lda(&corpus.docs, &corpus.vocab, &eta, &params).unwrap())
    });
}

fn svd(c: &mut Criterion) {
    let mut group = c.benchmark_group("truncated_svd");
    group.sample_size(10);
    for (method, name) in [
        (SvdMethod::Dense, "dense"),
        (SvdMethod::Subspace, "subspace"),
    ] {
        let m = random_counts(600, 150, 0.05, 3);
        let cfg = LsaConfig {
            method,
            ..Default::default()
        };
        group.bench_with_input(BenchmarkId::new(name, "600x150_k5"), &m, |b, m| {
            b.iter(|| fit_lsa_with(m, 5, &cfg).unwrap())
        });
    }
    group.finish();
}

fn kmeans(c: &mut Criterion) {
    let blobs = gaussian_blobs(5, 200, 50, 0.2, 4);
    c.bench_function("kmeans_1000x50_k5_10_restarts", |b| {
        b.iter(|| fit_kmeans(&blobs.table, 5, None, 10, 9).unwrap())
    });
}

fn coherence(c: &mut Criterion) {
    let corpus = planted(200, 2);
    let eta = build_eta(None, &corpus.vocab, 5).unwrap();
    let params = LdaParams {
        iterations: 100,
        seed: 3,
        ..Default::default()
    };
    let model = fit_lda(&corpus.docs, &corpus.vocab, &eta, &params).unwrap();
    let topics: Vec<Vec<String>> = lda_topics(&model, &corpus.vocab, 10)
        .iter()
        .map(|t| t.words().into_iter().map(str::to_string).collect())
        .collect();
    c.bench_function("c_v_5x10_window_110", |b| {
        b.iter(|| coherence_cv(&topics, &corpus.docs, 110).unwrap())
    });
    c.bench_function("u_mass_5x10", |b| {
        b.iter(|| coherence_umass(&topics, &corpus.docs).unwrap())
    });
}

criterion_group!(benches, gibbs, svd, kmeans, coherence);
criterion_main!(benches);
