use aes_core::simulator::*;
use aes_core::Execution;
use proptest::prelude::*;

fn small(node_count: usize, battery: f64) -> ScenarioConfig {
    ScenarioConfig {
        field_width_m: 120.0,
        field_height_m: 120.0,
        region_size_m: 40.0,
        node_count,
        sink_x: 60.0,
        sink_y: 60.0,
        sim_duration_s: 300.0,
        init_phase_s: 10.0,
        connections: 4,
        data_total_bytes: 400_000,
        initial_battery_j: battery,
        indoor_zones: IndoorZone::default_layout(120.0, 120.0),
        ..Default::default()
    }
}

/// One sensor in a single region with the sink in range.
fn lone_node() -> ScenarioConfig {
    ScenarioConfig {
        field_width_m: 40.0,
        field_height_m: 40.0,
        region_size_m: 40.0,
        node_count: 1,
        sink_x: 20.0,
        sink_y: 20.0,
        sim_duration_s: 100.0,
        init_phase_s: 10.0,
        connections: 1,
        data_total_bytes: 1000,
        packet_size_bytes: 1000,
        indoor_zones: vec![],
        ..Default::default()
    }
}

#[test]
fn zero_duration_run_is_all_zero() {
    let cfg = ScenarioConfig {
        sim_duration_s: 0.0,
        ..Default::default()
    };
    for kind in &cfg.baselines {
        let r = run(&cfg, kind, 1).unwrap();
        assert_eq!(r.total_energy_j, 0.0);
        assert!(r.per_node_energy_j.iter().all(|&e| e == 0.0));
        assert_eq!(r.packets_generated, 0);
        assert_eq!(r.packets_delivered, 0);
        assert_eq!(r.active_s + r.passive_s + r.sleep_s, 0.0);
        assert_eq!(r.lifetime_s, 0.0);
        r.check_invariants(&cfg.energy).unwrap();
    }
}

#[test]
fn single_packet_costs_its_airtime_at_comm_power() {
    let cfg = lone_node();
    let r = run(&cfg, &BaselineKind::aes(), 5).unwrap();
    assert_eq!(r.packets_generated, 1);
    assert_eq!(r.packets_delivered, 1);
    let airtime = 1000.0 * 377e-6;
    assert!((r.power_state_s.tx_s - airtime).abs() < 1e-12);
    let tx_energy = r.power_state_s.tx_s * cfg.energy.power_comm * 1e-3;
    assert!((tx_energy - 0.06032).abs() < 1e-12);
    // plus 10 s of init-phase sensing at 12 mW, then sleep draw and 5 ms bursts
    let init = 10.0 * 0.012;
    let steady_max = 90.0 * 0.5e-3 + 180.0 * 0.005 * 0.012;
    assert!(r.total_energy_j > tx_energy + init);
    assert!(r.total_energy_j < tx_energy + init + steady_max);
    r.check_invariants(&cfg.energy).unwrap();

    // baselines pay their overhead factor on the same packet
    let smac = run(&cfg, cfg.baseline(Protocol::Smac), 5).unwrap();
    assert!((smac.power_state_s.tx_s - 1.2 * airtime).abs() < 1e-12);
}

#[test]
fn runs_are_bit_identical() {
    let cfg = small(27, 5.0);
    for kind in &cfg.baselines {
        let a = run(&cfg, kind, 9).unwrap();
        let b = run(&cfg, kind, 9).unwrap();
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }
    let a = run(&cfg, &BaselineKind::aes(), 9).unwrap();
    let b = run(&cfg, &BaselineKind::aes(), 10).unwrap();
    assert_ne!(a, b);
}

#[test]
fn lifetime_is_first_depletion() {
    let mut cfg = small(18, 0.5);
    cfg.data_total_bytes = 0;
    // 0.5 J at 50% listening on 160 mW lasts about 6.2 s after init
    let r = run(&cfg, cfg.baseline(Protocol::Smac), 1).unwrap();
    assert_eq!(r.depleted_nodes, 18);
    let per_node_w = (0.5 * 160.0 + 0.5 * 0.5) * 1e-3;
    let sleep_until_init = 10.0 * 0.5e-3;
    let expected = 10.0 + (0.5 - sleep_until_init) / per_node_w;
    assert!(r.lifetime_s <= expected + 1e-9, "{}", r.lifetime_s);
    assert!((r.total_energy_j - 18.0 * 0.5).abs() < 1e-9);
    r.check_invariants(&cfg.energy).unwrap();

    let big = small(18, 1e6);
    let r = run(&big, &BaselineKind::aes(), 1).unwrap();
    assert_eq!(r.depleted_nodes, 0);
    assert_eq!(r.lifetime_s, big.sim_duration_s);
}

#[test]
fn infeasible_traffic_is_reported_not_fatal() {
    let mut cfg = small(18, 1e6);
    cfg.data_total_bytes = 50_000_000;
    for kind in &cfg.baselines {
        let r = run(&cfg, kind, 2).unwrap();
        assert!(r.packets_delivered < r.packets_generated);
        r.check_invariants(&cfg.energy).unwrap();
    }
}

#[test]
fn sink_energy_is_opt_in() {
    let mut cfg = small(18, 1e6);
    let without = run(&cfg, &BaselineKind::aes(), 4).unwrap();
    cfg.include_sink_energy = true;
    let with = run(&cfg, &BaselineKind::aes(), 4).unwrap();
    assert_eq!(with.node_count, without.node_count + 1);
    let sink = with.per_node_energy_j.last().unwrap();
    assert!((sink - 0.160 * cfg.sim_duration_s).abs() < 1e-9);
    with.check_invariants(&cfg.energy).unwrap();
}

#[test]
fn aes_keeps_one_active_node_per_region() {
    let cfg = ScenarioConfig::default();
    for seed in 1..=3 {
        let r = run(&cfg, &BaselineKind::aes(), seed).unwrap();
        assert_eq!(r.region_violations, 0);
        assert_eq!(r.sleeping_transmissions, 0);
        assert!(r.decisions.total() > 0);
        assert!(r.passive_s > 0.0, "indoor nodes should reach passive mode");
        r.check_invariants(&cfg.energy).unwrap();
    }
}

#[test]
fn duty_cycle_is_monotone_in_energy() {
    for battery in [25.0, 1e6] {
        let cfg = small(27, battery);
        for p in [
            Protocol::Smac,
            Protocol::Tmac,
            Protocol::Trama,
            Protocol::Cmac,
        ] {
            let mut last = 0.0;
            for duty in [0.05, 0.1, 0.2, 0.4, 0.6, 0.8, 1.0] {
                let mut kind = cfg.baseline(p).clone();
                kind.duty_cycle_fraction = duty;
                let e = run(&cfg, &kind, 3).unwrap().total_energy_j;
                assert!(e >= last * (1.0 - 1e-12), "{p} duty {duty}: {e} < {last}");
                last = e;
            }
        }
    }
}

#[test]
fn campaign_of_one_equals_the_run() {
    let cfg = small(27, 25.0);
    let kind = cfg.baseline(Protocol::Tmac).clone();
    let c = run_campaign(
        &cfg,
        std::slice::from_ref(&kind),
        &[7],
        Execution::Sequential,
    )
    .unwrap();
    let r = run(&cfg, &kind, 7).unwrap();
    assert_eq!(c.reports, vec![r.clone()]);
    let row = &c.summary[0];
    assert_eq!(row.runs, 1);
    assert_eq!(
        row.total_energy_j,
        Stat {
            mean: r.total_energy_j,
            std: 0.0
        }
    );
    assert_eq!(row.lifetime_s.mean, r.lifetime_s);
    assert_eq!(row.savings_pct, None);
}

#[test]
fn duplicate_kinds_give_identical_rows() {
    let cfg = small(27, 25.0);
    let kinds = vec![BaselineKind::aes(), BaselineKind::aes()];
    let c = run_campaign(&cfg, &kinds, &[1, 2, 3], Execution::Parallel).unwrap();
    assert_eq!(c.summary[0], c.summary[1]);
    assert_eq!(c.reports.len(), 6);
}

#[test]
fn execution_strategy_does_not_change_results() {
    let cfg = small(27, 25.0);
    let seeds = [1, 2, 3, 4];
    let seq = run_campaign(&cfg, &cfg.baselines, &seeds, Execution::Sequential).unwrap();
    let par = run_campaign(&cfg, &cfg.baselines, &seeds, Execution::Parallel).unwrap();
    let two = run_campaign(
        &cfg,
        &cfg.baselines,
        &seeds,
        Execution::ParallelWith { jobs: 2 },
    )
    .unwrap();
    assert_eq!(format!("{seq:?}"), format!("{par:?}"));
    assert_eq!(format!("{seq:?}"), format!("{two:?}"));
}

#[test]
fn campaign_reports_are_sorted_and_savings_filled() {
    let cfg = small(27, 25.0);
    let kinds: Vec<BaselineKind> = cfg.baselines.iter().rev().cloned().collect();
    let c = run_campaign(&cfg, &kinds, &[5, 2], Execution::Parallel).unwrap();
    let keys: Vec<(Protocol, u64)> = c.reports.iter().map(|r| (r.protocol, r.seed)).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    // summary follows request order
    assert_eq!(c.summary[0].protocol, Protocol::Cmac);
    assert!(c.summary.iter().all(|r| r.savings_pct.is_some()));
    assert!(c.reports.iter().all(|r| r.savings_pct.is_some()));
    let aes = c.row(Protocol::Aes).unwrap().total_energy_j.mean;
    let smac = c.row(Protocol::Smac).unwrap();
    let expected = compute_savings(aes, smac.total_energy_j.mean).unwrap();
    assert_eq!(smac.savings_pct, Some(expected));
}

#[test]
fn empty_campaign_is_an_error() {
    let cfg = small(27, 25.0);
    assert_eq!(
        run_campaign(&cfg, &[], &[1], Execution::Sequential),
        Err(SimError::EmptyCampaign)
    );
    assert_eq!(
        run_campaign(&cfg, &cfg.baselines, &[], Execution::Sequential),
        Err(SimError::EmptyCampaign)
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn every_run_satisfies_the_invariants(
        nodes in 9usize..40,
        battery in prop_oneof![Just(0.3), Just(2.0), Just(25.0), Just(1e6)],
        protocol in 0usize..6,
        seed in 0u64..1000,
        connections in 1usize..8,
        kbytes in 0u64..800,
        include_sink in any::<bool>(),
        queue in 1usize..60,
    ) {
        let mut cfg = small(nodes, battery);
        cfg.connections = connections;
        cfg.data_total_bytes = kbytes * 1000 + 17;
        cfg.include_sink_energy = include_sink;
        cfg.queue_capacity_packets = queue;
        let kind = cfg.baselines[protocol].clone();
        let r = run(&cfg, &kind, seed).unwrap();
        prop_assert_eq!(r.check_invariants(&cfg.energy), Ok(()));
        prop_assert!(r.per_node_energy_j.iter().all(|&e| e >= 0.0 && e <= battery.min(1e9) + 1e-9 || include_sink));
        prop_assert!(r.lifetime_s <= cfg.sim_duration_s);
    }
}
