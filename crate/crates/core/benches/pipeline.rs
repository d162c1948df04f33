//! Sequential-versus-parallel benchmarks for the three pipeline stages.
//!
//! With the `parallel` feature (default), each stage runs inside rayon pools
//! of one thread and of all available threads, so `cargo bench` reports the
//! data-parallel speedup directly. Without the feature only the sequential
//! fallback exists and a single series is reported.

use std::collections::BTreeMap;

use criterion::{criterion_group, criterion_main, Criterion};

use sceneq_core::analysis::analyze_dataset;
use sceneq_core::family::{builtin_families, builtin_synonyms};
use sceneq_core::generate::{generate_dataset, GenerationConfig};
use sceneq_core::program::execute;
use sceneq_core::sampler::{sample_scenes, SamplerConfig};
use sceneq_core::scene::SceneGraph;

const BENCH_SCENES: usize = 96;

fn bench_stage(c: &mut Criterion, name: &str, work: impl Fn() + Copy + Send + Sync) {
    let mut group = c.benchmark_group(name);
    group.sample_size(10);
    #[cfg(feature = "parallel")]
    {
        let cores = std::thread::available_parallelism().map_or(2, |n| n.get());
        for threads in [1usize, cores] {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .expect("pool");
            group.bench_function(format!("{threads}_workers"), |b| {
                b.iter(|| pool.install(work));
            });
        }
    }
    #[cfg(not(feature = "parallel"))]
    group.bench_function("sequential", |b| b.iter(work));
    group.finish();
}

fn pipeline_benches(c: &mut Criterion) {
    let sampler_config = SamplerConfig {
        seed: 17,
        ..Default::default()
    };
    let scenes = sample_scenes(BENCH_SCENES, &sampler_config).expect("scenes");
    let families = builtin_families();
    let synonyms = builtin_synonyms();
    let gen_config = GenerationConfig {
        questions_per_image: 5,
        seed: 17,
        ..Default::default()
    };
    let bundle = generate_dataset(&scenes, &families, &synonyms, &gen_config).expect("dataset");
    let by_id: BTreeMap<u64, &SceneGraph> = scenes.iter().map(|s| (s.scene_id, s)).collect();

    bench_stage(c, "sample_scenes", || {
        std::hint::black_box(sample_scenes(BENCH_SCENES, &sampler_config).unwrap());
    });
    bench_stage(c, "generate_questions", || {
        std::hint::black_box(generate_dataset(&scenes, &families, &synonyms, &gen_config).unwrap());
    });
    bench_stage(c, "analyze_questions", || {
        std::hint::black_box(analyze_dataset(&bundle.instances, &by_id).unwrap());
    });

    // Single-question executor throughput, for context.
    let mut group = c.benchmark_group("executor");
    let q = &bundle.instances[0];
    let scene = by_id[&q.scene_id];
    group.bench_function("strict_execute", |b| {
        b.iter(|| std::hint::black_box(execute(&q.program, scene).unwrap()));
    });
    group.finish();
}

criterion_group!(benches, pipeline_benches);
criterion_main!(benches);
