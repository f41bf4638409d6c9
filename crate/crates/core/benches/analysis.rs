use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use txparallax::analysis::{list_schedule, max_weight_clique, CliqueSearch, ScheduleMode};
use txparallax::par::Execution;
use txparallax::synth::{generate_blocks, WorkloadProfile};
use txparallax::{analyze_blocks, build_tx_graph, AnalysisOptions, ConflictMode, DisentangleConfig, PipelineOptions};

fn pipeline(c: &mut Criterion) {
    let numbers: Vec<u64> = (15_600_000..15_600_032).collect();
    let blocks = generate_blocks(&WorkloadProfile::defi(), &numbers, Execution::Parallel).unwrap();
    let mut group = c.benchmark_group("analyze_blocks");
    group.sample_size(10);
    for execution in [Execution::Sequential, Execution::Parallel] {
        let opts = PipelineOptions {
            conflict_mode: ConflictMode::WriteAware,
            disentangle: Some(DisentangleConfig::default()),
            analysis: AnalysisOptions {
                clique: CliqueSearch::Skip,
                schedule: ScheduleMode::EarliestStart,
            },
            execution,
        };
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{execution:?}")),
            &opts,
            |b, opts| b.iter(|| analyze_blocks(&blocks, 1, opts).unwrap()),
        );
    }
    group.finish();
}

fn per_block(c: &mut Criterion) {
    let block = generate_blocks(&WorkloadProfile::defi(), &[15_600_000], Execution::Sequential).unwrap();
    let cfg = DisentangleConfig::default();
    let g = build_tx_graph(&block, ConflictMode::WriteAware, Some(&cfg)).unwrap();
    c.bench_function("build_tx_graph", |b| {
        b.iter(|| build_tx_graph(&block, ConflictMode::WriteAware, Some(&cfg)).unwrap())
    });
    c.bench_function("list_schedule", |b| {
        b.iter(|| list_schedule(&g, ScheduleMode::EarliestStart))
    });
    c.bench_function("max_weight_clique", |b| b.iter(|| max_weight_clique(&g, None)));
}

criterion_group!(benches, pipeline, per_block);
criterion_main!(benches);
