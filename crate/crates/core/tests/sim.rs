use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rodd::netmodel::{Role, NetworkConfig};
use rodd::sim::{run_iteration, run_simulation, Scenario, SimConfig, MIN_CONSTRAINTS};

/// Small enough to run many iterations quickly.
fn small(seed: u64) -> SimConfig {
    let mut cfg = SimConfig::default().with_seed(seed);
    cfg.network.node_count = 36;
    cfg.network.area_side = 30.0;
    cfg.bits = 5;
    cfg.frame_length = 160;
    cfg.total_iterations = 10;
    cfg.stage1_iterations = 5;
    cfg
}

#[test]
fn symbol_budget() {
    // the budget depends only on M_s and the iteration count
    let cfg = SimConfig {
        network: NetworkConfig { node_count: 20, ..NetworkConfig::reference() },
        bits: 3,
        total_iterations: 10,
        ..SimConfig::default()
    };
    let out = run_simulation(&cfg).unwrap();
    assert_eq!(out.records.len(), 10);
    assert_eq!(out.symbols_elapsed, 12_000);
}

#[test]
fn protocol_invariants_hold_every_iteration() {
    for seed in 1..=3 {
        let cfg = small(seed);
        let scenario = Scenario::new(cfg.clone()).unwrap();
        let mut state = scenario.initial_state();
        let mut previous_tx: BTreeSet<u32> = BTreeSet::new();
        for it in 1..=cfg.total_iterations {
            let tx: BTreeSet<u32> = state
                .iter()
                .filter(|s| s.role == Role::Client && scenario.transmits(s, it))
                .map(|s| s.id)
                .collect();
            if it <= cfg.stage1_iterations {
                assert!(previous_tx.is_subset(&tx), "seed {seed}: transmit set shrank at iteration {it}");
            }
            previous_tx = tx;

            let (next, record) = run_iteration(&scenario, &state, it).unwrap();
            for (before, after) in state.iter().zip(&next) {
                let truth = scenario.network.node(before.id).unwrap().position;
                match before.role {
                    Role::Anchor => assert_eq!(after.estimate, truth),
                    Role::Client if after.heard_count_last < MIN_CONSTRAINTS => {
                        assert_eq!(after.estimate, before.estimate, "seed {seed} node {} moved", before.id)
                    }
                    Role::Client => {}
                }
            }
            assert_eq!(record.iteration, it);
            assert!(record.updated + record.underdetermined <= scenario.network.clients().count());
            state = next;
        }
    }
}

#[test]
fn records_are_deterministic() {
    let a = run_simulation(&small(4)).unwrap();
    let b = run_simulation(&small(4)).unwrap();
    assert_eq!(a, b);
    let c = run_simulation(&small(5)).unwrap();
    assert_ne!(a.records, c.records);
}

#[test]
fn small_network_converges() {
    let out = run_simulation(&small(2)).unwrap();
    let first = out.records[0].average_error;
    let last = out.final_average_error();
    println!("average error {first:.3} m -> {last:.3} m");
    assert!(last < first, "{first} -> {last}");
}

#[test]
fn ci_profile_finishes_in_time() {
    let start = Instant::now();
    let out = run_simulation(&SimConfig::ci_profile()).unwrap();
    let elapsed = start.elapsed();
    println!(
        "ci profile: {:.1} s, average error {:.3} m -> {:.3} m",
        elapsed.as_secs_f64(),
        out.records[0].average_error,
        out.final_average_error()
    );
    assert_eq!(out.records.len(), 20);
    assert!(elapsed <= Duration::from_secs(180), "{elapsed:?}");
}
