use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use pidtwin_bench::{train, train_pidl};
use pidtwin_core::transform::{Rule, RuleKind};
use pidtwin_core::{
    apply_ruleset, filter_fidelity, parse_graph_json, parse_pidl, solve_steady_state, to_json, validate,
    FidelityProfile, RuleSet, SourceDoc,
};

const SIZES: [usize; 3] = [10, 50, 200];

fn ingest(c: &mut Criterion) {
    let mut group = c.benchmark_group("ingest");
    for n in SIZES {
        let text = train_pidl(n);
        group.bench_with_input(BenchmarkId::new("pidl", n), &text, |b, t| {
            b.iter(|| parse_pidl(&SourceDoc::pidl("bench", t.as_bytes())).unwrap())
        });
        let json = to_json(&train(n));
        group.bench_with_input(BenchmarkId::new("graph_json", n), &json, |b, t| {
            b.iter(|| parse_graph_json(&SourceDoc::graph_json("bench", t.as_bytes())).unwrap())
        });
    }
    group.finish();
}

fn transform(c: &mut Criterion) {
    let steady = FidelityProfile::steady_state();
    let rules = RuleSet::new("bench", vec![Rule::new("streams", RuleKind::InsertStreamNodes)]).unwrap();
    let mut group = c.benchmark_group("transform");
    for n in SIZES {
        let g = train(n);
        group.bench_with_input(BenchmarkId::new("filter_steady", n), &g, |b, g| {
            b.iter(|| filter_fidelity(black_box(g), &steady).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("insert_streams", n), &g, |b, g| {
            b.iter(|| apply_ruleset(black_box(g), &rules).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("validate", n), &g, |b, g| {
            b.iter(|| validate(black_box(g), &steady))
        });
    }
    group.finish();
}

fn balance(c: &mut Criterion) {
    let mut group = c.benchmark_group("balance");
    for n in SIZES {
        let g = train(n);
        group.bench_with_input(BenchmarkId::new("solve", n), &g, |b, g| {
            b.iter(|| solve_steady_state(black_box(g)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, ingest, transform, balance);
criterion_main!(benches);
