use criterion::{black_box, criterion_group, criterion_main, BatchSize, Criterion};

use commvec::cooccur::{build_cooccurrence, BuildOptions};
use commvec::embed::{train, EmbedConfig, Trainer};
use commvec::ingest::SubredditVocab;
use commvec::EmbeddingSpace;
use commvec_bench::{block_matrix, block_memberships};

fn cooccur(c: &mut Criterion) {
    let sets = block_memberships(5000, 1);
    let vocab = SubredditVocab::from_sets(&sets);
    c.bench_function("cooccur_build_5k_users", |b| {
        b.iter(|| build_cooccurrence(black_box(&sets), &vocab, &BuildOptions::default()).unwrap())
    });
}

fn embed_epoch(c: &mut Criterion) {
    let m = block_matrix(5000, 2);
    let mut group = c.benchmark_group("embed_epoch_dim150");
    for deterministic in [true, false] {
        let config = EmbedConfig {
            deterministic,
            ..EmbedConfig::default()
        };
        let name = if deterministic { "sequential" } else { "hogwild" };
        group.bench_function(name, |b| {
            b.iter_batched(
                || Trainer::new(&m, &config).unwrap(),
                |mut t| t.train_epoch().unwrap(),
                BatchSize::SmallInput,
            )
        });
    }
    group.finish();
}

fn queries(c: &mut Criterion) {
    let m = block_matrix(3000, 3);
    let config = EmbedConfig {
        dim: 50,
        epochs: 20,
        ..EmbedConfig::default()
    };
    let space = EmbeddingSpace::new(&train(&m, &config).unwrap().embeddings).unwrap();
    let a = space.names()[0].clone();
    let (x, y) = (space.names()[1].clone(), space.names()[2].clone());
    c.bench_function("nearest_neighbors_k10", |b| {
        b.iter(|| space.nearest_neighbors(black_box(&a), 10, &[]).unwrap())
    });
    c.bench_function("analogy_k10", |b| b.iter(|| space.analogy(&a, &x, &y, 10).unwrap()));
}

criterion_group!(benches, cooccur, embed_epoch, queries);
criterion_main!(benches);
