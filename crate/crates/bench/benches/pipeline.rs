use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use relvalue::data::{generate_instances, random_walk, GeneratorSpec};
use relvalue::gnn::encode;
use relvalue::rng::seeded;
use relvalue::search::hmax;
use relvalue::trainer::vocabulary;
use relvalue::{astar_optimal, Aggregation, DomainTag, GnnConfig, GnnModel, GroundTask};

fn instance(tag: DomainTag, size: usize) -> GroundTask {
    let g = generate_instances(&GeneratorSpec::new(tag, size..=size, 1), 11).unwrap();
    g.instances.into_iter().next().unwrap().1
}

fn bench_hmax(c: &mut Criterion) {
    let mut group = c.benchmark_group("hmax");
    for (tag, size) in [
        (DomainTag::BlocksClear, 10),
        (DomainTag::Visitall, 16),
        (DomainTag::Transport, 8),
    ] {
        let task = instance(tag, size);
        group.bench_with_input(BenchmarkId::new(tag.as_str(), size), &task, |b, t| {
            b.iter(|| hmax(t, black_box(&t.initial)))
        });
    }
    group.finish();
}

fn bench_astar(c: &mut Criterion) {
    let mut group = c.benchmark_group("astar");
    group.sample_size(10);
    for (tag, size) in [
        (DomainTag::BlocksClear, 8),
        (DomainTag::Gripper, 4),
        (DomainTag::Visitall, 9),
    ] {
        let task = instance(tag, size);
        group.bench_with_input(BenchmarkId::new(tag.as_str(), size), &task, |b, t| {
            b.iter(|| astar_optimal(t, black_box(&t.initial)))
        });
    }
    group.finish();
}

fn bench_forward(c: &mut Criterion) {
    let mut group = c.benchmark_group("gnn_forward");
    let task = instance(DomainTag::BlocksClear, 12);
    let state = random_walk(&task, 20, &mut seeded(1)).pop().unwrap();
    let s = encode(&task, &state);
    for aggregation in [Aggregation::Sum, Aggregation::SmoothMax] {
        for (k, rounds) in [(16, 10), (32, 30)] {
            let config = GnnConfig {
                k,
                rounds,
                aggregation,
                ..GnnConfig::default()
            };
            let model =
                GnnModel::new(config, vocabulary(DomainTag::BlocksClear).unwrap(), 0).unwrap();
            let id = BenchmarkId::new(aggregation.as_str(), format!("k{k}-L{rounds}"));
            group.bench_with_input(id, &s, |b, s| {
                b.iter(|| model.forward(black_box(s), 0).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, bench_hmax, bench_astar, bench_forward);
criterion_main!(benches);
