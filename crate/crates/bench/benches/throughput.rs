use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use sdfmig::migration::explore_single_migrations;
use sdfmig::{mcm_throughput, self_timed_throughput, AnalysisOptions};
use sdfmig_bench::{mjpeg, ring};

fn case_study(c: &mut Criterion) {
    let s = mjpeg();
    let graph = s.analysable_graph().unwrap();
    let opts = AnalysisOptions::default();
    c.bench_function("mjpeg baseline", |b| b.iter(|| self_timed_throughput(black_box(&graph), &opts).unwrap()));

    let baseline = self_timed_throughput(&graph, &opts).unwrap();
    let mapping = s.mapping.as_ref().unwrap();
    c.bench_function("mjpeg explore", |b| {
        b.iter(|| {
            explore_single_migrations(
                black_box(&s.graph),
                &s.platform,
                mapping,
                &s.defaults,
                &baseline,
                &s.meta.clock_hz,
                &s.build,
                &opts,
            )
        })
    });
}

fn ring_sizes(c: &mut Criterion) {
    let mut group = c.benchmark_group("ring");
    let opts = AnalysisOptions::default();
    for n in [4usize, 8, 16] {
        let g = ring(n, 3);
        group.bench_with_input(BenchmarkId::new("self-timed", n), &g, |b, g| {
            b.iter(|| self_timed_throughput(g, &opts).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("karp", n), &g, |b, g| b.iter(|| mcm_throughput(g).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, case_study, ring_sizes);
criterion_main!(benches);
