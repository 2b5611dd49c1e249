//! Parallel vs sequential throughput of the three hot paths: profile
//! generalization, the cost/ratio assessment, and unicity estimation.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use tracerisk_core::exec;
use tracerisk_core::generalize::Generalizer;
use tracerisk_core::model::GeneralizationProfile;
use tracerisk_core::reident::{assess, unicity, ReidentConfig};
use tracerisk_core::synth::{generate, LevelSpec, SynthConfig};

fn bench_config() -> SynthConfig {
    SynthConfig {
        n_users: 2000,
        n_towers: 200,
        levels: vec![
            LevelSpec::new("zip", 200),
            LevelSpec::new("district", 40),
            LevelSpec::new("municipality", 12),
        ],
        period_days: 10,
        calls_median: 20.0,
        seed: 17,
        ..SynthConfig::default()
    }
}

fn throughput(criterion: &mut Criterion) {
    let config = bench_config();
    let (raw, hierarchy) = generate(&config).expect("generate bench dataset");
    let generalizer = Generalizer::new(&raw, &hierarchy).expect("compile bench dataset");
    let fine = GeneralizationProfile::new("zip", 1).expect("profile");
    let coarse = GeneralizationProfile::new("municipality", 24).expect("profile");
    let coarse_ds = generalizer.generalize(&coarse).expect("generalize");
    let reident_config = ReidentConfig {
        trials_per_user: 5,
        unicity_trials: 1,
        p_values: vec![],
        ..ReidentConfig::default()
    };

    let mut group = criterion.benchmark_group("generalize");
    group.bench_function("parallel", |b| {
        b.iter(|| black_box(generalizer.generalize(&fine).unwrap()))
    });
    group.bench_function("sequential", |b| {
        b.iter(|| exec::sequential(|| black_box(generalizer.generalize(&fine).unwrap())))
    });
    group.finish();

    let mut group = criterion.benchmark_group("assess");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| black_box(assess(&coarse_ds, &reident_config).unwrap()))
    });
    group.bench_function("sequential", |b| {
        b.iter(|| exec::sequential(|| black_box(assess(&coarse_ds, &reident_config).unwrap())))
    });
    group.finish();

    let mut group = criterion.benchmark_group("unicity");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| black_box(unicity(&coarse_ds, 4, 50, 7).unwrap()))
    });
    group.bench_function("sequential", |b| {
        b.iter(|| exec::sequential(|| black_box(unicity(&coarse_ds, 4, 50, 7).unwrap())))
    });
    group.finish();
}

criterion_group!(benches, throughput);
criterion_main!(benches);
