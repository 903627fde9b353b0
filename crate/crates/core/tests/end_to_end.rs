use eebf::channel::{realize, ChannelFile};
use eebf::harness::{run_experiment, sidecar_path, Algorithm, ExperimentSpec, RunOptions, ScenarioConfig, SweepVariable};
use eebf::outer_solver::{outer_solve, OuterOptions};
use eebf::parsim::{count_overhead, run_parallel, Fault, MessageKind, Node, ParsimOptions};
use eebf::Error;

fn small_spec() -> ExperimentSpec {
    ExperimentSpec {
        name: "e2e".into(),
        sweep_variable: SweepVariable::BsPowerDbm,
        sweep_values: vec![30.0, 46.0],
        trials: 4,
        base: ScenarioConfig {
            cells: 2,
            antennas: 2,
            users: 2,
            ..ScenarioConfig::default()
        },
        algorithms: vec![Algorithm::Proposed, Algorithm::WmmseSumRate, Algorithm::PowerAllocMrt, Algorithm::PowerAllocRandom],
        seed: 77,
        restarts: 1,
    }
}

#[test]
fn experiment_csv_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("out.csv");
    let spec = small_spec();
    let opts = RunOptions {
        deterministic: true,
        parallel: false,
        spot_check: true,
    };
    let res = run_experiment(&spec, opts).unwrap();
    assert_eq!(res.rows.len(), 2 * 4 * 4);
    assert_eq!(res.means.len(), 2 * 4);
    res.save(&spec, &csv_path).unwrap();

    let mut reader = csv::Reader::from_path(&csv_path).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(
        header,
        [
            "experiment", "sweep_var", "sweep_value", "trial", "seed", "algorithm", "ee_nats_per_joule", "ee_bits_per_joule",
            "sum_rate_nats", "tx_power_w", "outer_iters", "inner_iters", "converged", "wall_ms"
        ]
    );
    assert_eq!(reader.records().count(), 40);

    let sidecar: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(sidecar_path(&csv_path)).unwrap()).unwrap();
    assert_eq!(sidecar["spec"]["name"], "e2e");
    assert_eq!(sidecar["resolved"].as_array().unwrap().len(), 2);

    // Deterministic mode is byte-identical across runs and execution modes.
    let again = run_experiment(&spec, RunOptions { parallel: true, ..opts }).unwrap();
    let (mut a, mut b) = (Vec::new(), Vec::new());
    res.write_csv(&mut a).unwrap();
    again.write_csv(&mut b).unwrap();
    assert_eq!(a, b);
}

#[test]
fn every_row_is_consistent() {
    let res = run_experiment(&small_spec(), RunOptions::default()).unwrap();
    for r in &res.rows {
        assert!(r.converged, "{r:?}");
        assert!((r.ee_bits_per_joule - r.ee_nats_per_joule / std::f64::consts::LN_2).abs() < 1e-12);
        let budget = 2.0 * eebf::units::dbm_to_watt(r.sweep_value);
        assert!(r.tx_power_w <= budget * (1.0 + 1e-9));
    }
}

#[test]
fn spec_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("spec.json");
    let spec = small_spec();
    std::fs::write(&path, serde_json::to_string(&spec).unwrap()).unwrap();
    assert_eq!(ExperimentSpec::load(&path).unwrap(), spec);

    std::fs::write(&path, r#"{"name": "bad", "sweep_variable": "bs_power_dbm", "sweep_values": [], "algorithms": ["proposed"], "seed": 1}"#).unwrap();
    assert!(ExperimentSpec::load(&path).is_err());
}

#[test]
fn channel_fixture_round_trip_reproduces_solution() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h.json");
    let scenario = ScenarioConfig::default();
    let cfg = scenario.system_config().unwrap();
    let (_, h) = realize(&scenario.geometry, &cfg, 5).unwrap();
    ChannelFile {
        seed: 5,
        geometry: scenario.geometry.clone(),
        channels: h.clone(),
    }
    .save(&path)
    .unwrap();
    let loaded = ChannelFile::load(&path).unwrap();
    assert_eq!(loaded.channels, h);
    let opts = OuterOptions::for_config(&cfg);
    assert_eq!(outer_solve(&cfg, &loaded.channels, &opts).unwrap(), outer_solve(&cfg, &h, &opts).unwrap());
}

#[test]
fn parallel_trace_export_and_fault() {
    let scenario = ScenarioConfig::default();
    let cfg = scenario.system_config().unwrap();
    let (_, h) = realize(&scenario.geometry, &cfg, 12).unwrap();
    let opts = ParsimOptions::for_config(&cfg);
    let (rep, trace) = run_parallel(&cfg, &h, &opts).unwrap();
    assert_eq!(rep, outer_solve(&cfg, &h, &opts.outer).unwrap());

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.jsonl");
    trace.save_jsonl(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let mut declared = 0u64;
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        if let Some(n) = v.get("real_count").and_then(|n| n.as_u64()) {
            if v["kind"] != "CsiShare" {
                declared += n;
            }
        }
    }
    assert_eq!(declared, count_overhead(&trace).unwrap());

    let faulty = ParsimOptions {
        fault: Some(Fault {
            round: 1,
            kind: MessageKind::CrossTermReport,
            from: Node::Processor(0),
        }),
        ..opts
    };
    assert!(matches!(run_parallel(&cfg, &h, &faulty), Err(Error::Protocol { round: 1, .. })));
}
