use dbrt_sim::config::{parse_config, ScenarioConfig};
use dbrt_sim::link::{Destination, FrameKind};
use dbrt_sim::sim::{run_scenario, Variant};
use dbrt_sim::verify::verify;
use dbrt_sim::NodeId;

fn load(name: &str) -> ScenarioConfig {
    let path = format!("{}/configs/{name}.cfg", env!("CARGO_MANIFEST_DIR"));
    parse_config(&std::fs::read_to_string(path).expect("config file")).expect("config parses")
}

#[test]
fn diamond_fails_over_to_the_other_branch() {
    let cfg = load("diamond");
    let out = run_scenario(&cfg).unwrap();
    assert_eq!(out.faults.len(), 1);
    let dead = out.faults[0].node;
    assert!(dead == NodeId(1) || dead == NodeId(2));
    let survivor = if dead == NodeId(1) { NodeId(2) } else { NodeId(1) };
    let fo = out
        .failovers
        .iter()
        .find(|f| f.node == NodeId(0) && f.dest == NodeId(3))
        .expect("source fails over");
    assert_eq!(fo.via, survivor);
    assert_eq!(fo.dead, Some(dead));
    assert!(out.report.is_conserved());
    assert!(verify(&cfg).unwrap().passed());
}

#[test]
fn diamond_dbrt_delivers_more_than_dsdv() {
    let dbrt = load("diamond");
    let mut dsdv = dbrt.clone();
    dsdv.dbrt.enabled = false;
    let a = run_scenario(&dsdv).unwrap();
    let b = run_scenario(&dbrt).unwrap();
    assert_eq!(a.variant(), Variant::Dsdv);
    assert_eq!(a.faults, b.faults);
    assert!(b.report.delivery_ratio() > a.report.delivery_ratio());
    assert!(b.report.control_frames >= a.report.control_frames);
}

#[test]
fn line_has_no_backup_and_loses_packets_after_the_relay_dies() {
    let cfg = load("line");
    let out = run_scenario(&cfg).unwrap();
    assert!(out.installs.is_empty());
    assert!(out.failovers.is_empty());
    assert!(out.report.delivered > 0);
    assert!(out.report.delivered < out.report.sent);
    let report = verify(&cfg).unwrap();
    assert!(report.passed());
    assert!(report.notes.iter().any(|n| n.contains("no backup available")));
}

#[test]
fn one_hop_delay_is_the_transmission_time() {
    let cfg = parse_config(
        "scenario.node_count = 2\nscenario.duration = 40\nmobility.model = static\n\
         topology.positions = 0 0; 100 0\ntraffic.flows = 0-1\n",
    )
    .unwrap();
    let out = run_scenario(&cfg).unwrap();
    assert!(out.report.delivered > 0);
    for r in out.records.iter().filter_map(|r| r.delay()) {
        assert!((r - 0.002048).abs() < 1e-9, "delay {r}");
    }
}

#[test]
fn heavy_loss_keeps_backups_disjoint() {
    let mut cfg = ScenarioConfig {
        node_count: 30,
        duration: 120.0,
        seed: 4,
        ..Default::default()
    };
    cfg.link.loss_prob = 0.3;
    cfg.dbrt.query_depth = 1;
    let report = verify(&cfg).unwrap();
    assert!(report.passed(), "{report}");
    assert!(report.counters.installs > 0);
}

#[test]
fn dsdv_traffic_is_identical_across_variants() {
    let mut cfg = ScenarioConfig {
        node_count: 20,
        duration: 80.0,
        seed: 9,
        ..Default::default()
    };
    let b = run_scenario(&cfg).unwrap();
    cfg.dbrt.enabled = false;
    let a = run_scenario(&cfg).unwrap();
    assert_eq!(a.trajectories, b.trajectories);
    let hellos = |o: &dbrt_sim::sim::RunOutput| {
        o.frames
            .iter()
            .filter(|f| f.kind == FrameKind::Hello && f.dst == Destination::Broadcast)
            .map(|f| (f.time, f.src))
            .collect::<Vec<_>>()
    };
    assert_eq!(hellos(&a), hellos(&b));
}
