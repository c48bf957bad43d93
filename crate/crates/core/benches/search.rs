//! Sequential versus rayon-parallel execution of the search engines on the
//! built-in proofs. Without the `parallel` feature both variants run on one
//! thread.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ksineq::assign::{classical_max, general_unsat_with, ks_colorability_with, BoundMode, SearchConfig};
use ksineq::catalog;
use ksineq::compat::{build_orthogonality_graph, enumerate_bases_with};
use ksineq::derive::{build_complete_set_parity, build_complete_set_rays};
use ksineq::exec::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn coloring(c: &mut Criterion) {
    let mut group = c.benchmark_group("ks_colorability");
    for name in ["cabello-18", "peres-33"] {
        let set = catalog::find(name).unwrap().load().set;
        let graph = build_orthogonality_graph(&set).unwrap();
        let bases = enumerate_bases_with(&graph, set.dim(), Execution::Sequential);
        for (label, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(label, name), &exec, |b, &exec| {
                b.iter(|| ks_colorability_with(black_box(&set), &graph, &bases, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn bases(c: &mut Criterion) {
    let mut group = c.benchmark_group("enumerate_bases");
    let set = catalog::find("peres-33").unwrap().load().set;
    let graph = build_orthogonality_graph(&set).unwrap();
    for (label, exec) in MODES {
        group.bench_with_input(BenchmarkId::new(label, "peres-33"), &exec, |b, &exec| {
            b.iter(|| enumerate_bases_with(black_box(&graph), 3, exec))
        });
    }
    group.finish();
}

fn general_search(c: &mut Criterion) {
    let mut group = c.benchmark_group("general_unsat");
    group.sample_size(20);
    let set = catalog::find("cabello-18").unwrap().load().set;
    let graph = build_orthogonality_graph(&set).unwrap();
    let bases = enumerate_bases_with(&graph, set.dim(), Execution::Sequential);
    let cs = build_complete_set_rays(&set, &graph, &bases).unwrap();
    for (label, exec) in MODES {
        group.bench_with_input(BenchmarkId::new(label, "cabello-18"), &exec, |b, &exec| {
            b.iter(|| general_unsat_with(black_box(&set), cs.polynomials(), exec).unwrap())
        });
    }
    group.finish();
}

fn branch_and_bound(c: &mut Criterion) {
    let mut group = c.benchmark_group("classical_max");
    group.sample_size(10);
    for name in ["mermin-peres", "mermin-pentagram"] {
        let loaded = catalog::find(name).unwrap().load();
        let cs = build_complete_set_parity(&loaded.set, &loaded.contexts).unwrap();
        for (label, exec) in MODES {
            let config = SearchConfig::default().with_execution(exec);
            group.bench_with_input(BenchmarkId::new(label, name), &config, |b, &config| {
                b.iter(|| classical_max(black_box(&loaded.set), cs.polynomials(), BoundMode::Exact, config).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, coloring, bases, general_search, branch_and_bound);
criterion_main!(benches);
