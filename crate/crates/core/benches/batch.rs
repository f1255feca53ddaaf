//! Batch scoring throughput, sequential against data parallel. Without the
//! `parallel` feature both variants run sequentially.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use sopstruct_core::exec::Execution;
use sopstruct_core::harness::{score_precomputed, EvalOptions};
use sopstruct_core::sop::random::DagGenerator;
use sopstruct_core::sop::serialize_sop;

fn batch(n: u64) -> Vec<(String, String)> {
    let gen = DagGenerator::default().with_defects(0.1);
    (0..n)
        .map(|seed| (format!("doc{seed}"), serialize_sop(&gen.generate_seeded(seed))))
        .collect()
}

fn scoring(c: &mut Criterion) {
    let dags = batch(256);
    let mut group = c.benchmark_group("score_precomputed_256");
    let modes = [
        ("sequential", Execution::Sequential),
        ("parallel", Execution::Parallel { threads: 0 }),
    ];
    for (name, execution) in modes {
        let opts = EvalOptions {
            execution,
            metadata: sopstruct_core::harness::MetadataOverrides {
                timestamp: Some("fixed".into()),
                git_revision: Some("fixed".into()),
            },
            ..EvalOptions::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(name), &opts, |b, opts| {
            b.iter(|| score_precomputed(&dags, &[], None, opts))
        });
    }
    group.finish();
}

criterion_group!(benches, scoring);
criterion_main!(benches);
