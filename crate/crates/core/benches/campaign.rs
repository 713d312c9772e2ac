//! Sequential vs rayon campaign execution on a small scenario.
//!
//! `cargo bench -p aes-core` compares both; with
//! `--no-default-features` the parallel arm falls back to sequential.

use std::hint::black_box;

use aes_core::simulator::{run_campaign, IndoorZone, ScenarioConfig};
use aes_core::Execution;
use criterion::{criterion_group, criterion_main, Criterion};

fn scenario() -> ScenarioConfig {
    ScenarioConfig {
        field_width_m: 120.0,
        field_height_m: 120.0,
        region_size_m: 40.0,
        node_count: 45,
        sink_x: 60.0,
        sink_y: 60.0,
        sim_duration_s: 300.0,
        init_phase_s: 10.0,
        connections: 6,
        data_total_bytes: 600_000,
        indoor_zones: IndoorZone::default_layout(120.0, 120.0),
        ..Default::default()
    }
}

fn campaign(c: &mut Criterion) {
    let cfg = scenario();
    let seeds: Vec<u64> = (1..=4).collect();
    let mut group = c.benchmark_group("campaign_6x4");
    group.sample_size(10);
    for (name, exec) in [
        ("sequential", Execution::Sequential),
        ("parallel", Execution::Parallel),
    ] {
        group.bench_function(name, |b| {
            b.iter(|| run_campaign(black_box(&cfg), &cfg.baselines, &seeds, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, campaign);
criterion_main!(benches);
