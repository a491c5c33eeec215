use std::path::Path;
use std::process::{Command, Output};

use csplan_core::net::load_network;
use csplan_core::RunRecord;

fn csplan(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_csplan"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn generate(dir: &Path) {
    let out = csplan(&["gen", "--nodes", "30", "--regions", "5", "--seed", "4", "--out", "net.json"], dir);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn gen_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path());
    let first = std::fs::read_to_string(dir.path().join("net.json")).unwrap();
    generate(dir.path());
    assert_eq!(first, std::fs::read_to_string(dir.path().join("net.json")).unwrap());
    let net = load_network(dir.path().join("net.json"), false).unwrap();
    assert_eq!((net.len(), net.n_regions()), (30, 5));
}

#[test]
fn solve_writes_a_record_and_report_reads_it() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path());
    let out = csplan(
        &["solve", "--net", "net.json", "--weights", "1,1,1,1", "--budget", "6", "--seed", "2", "--out", "runs"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let records = RunRecord::load_dir(dir.path().join("runs")).unwrap();
    assert_eq!(records.len(), 1);
    let record = &records[0];
    assert_eq!(record.scenario.name, "custom");
    assert_eq!(record.scenario.weights.as_array(), [0.25; 4]);
    assert_eq!(record.params.budget, 6);
    assert!(record.placement.count() <= 6);
    assert!(stdout(&out).contains(&record.run_id));

    let path = dir.path().join("runs").join(record.file_name());
    let out = csplan(&["report", "--run", path.to_str().unwrap(), "--geojson", "map.geojson"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("drift 0.000e0"), "{}", stdout(&out));
    let map: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("map.geojson")).unwrap()).unwrap();
    let selected = map["features"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|f| f["properties"]["selected"] == true)
        .count();
    assert_eq!(selected, record.placement.count());
}

#[test]
fn sweep_writes_records_and_tables() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path());
    let scenarios = concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/presets.json");
    let out = csplan(
        &["sweep", "--net", "net.json", "--scenarios", scenarios, "--budget", "6", "--out", "runs"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let records = RunRecord::load_dir(dir.path().join("runs")).unwrap();
    assert_eq!(records.len(), 7);
    let third = 0.5 / 3.0;
    let s1 = records.iter().find(|r| r.scenario.name == "Scenario 1").unwrap();
    for (got, want) in s1.scenario.weights.as_array().iter().zip([0.5, third, third, third]) {
        assert!((got - want).abs() < 1e-12);
    }
    let csv = std::fs::read_to_string(dir.path().join("runs/comparison.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "scenario,gamma_min,n_cs,flow_supported_pct,avg_charging_time_min,dn_demand_mwh,avg_travel_dist_km"
    );
    assert_eq!(lines.count(), 7);
    let text = std::fs::read_to_string(dir.path().join("runs/comparison.txt")).unwrap();
    assert!(text.contains("Baseline") && text.contains("Scenario 6"));
}

#[test]
fn exit_codes_follow_the_error_kind() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path());
    let solve = |extra: &[&str]| {
        let mut args = vec!["solve", "--out", "runs"];
        args.extend_from_slice(extra);
        csplan(&args, dir.path()).status.code()
    };
    assert_eq!(solve(&["--net", "missing.json", "--weights", "1,1,1,1"]), Some(2));
    assert_eq!(solve(&["--net", "net.json", "--weights", "1,1,-1,1"]), Some(1));
    assert_eq!(solve(&["--net", "net.json", "--weights", "1,1,1"]), Some(1));
    assert_eq!(solve(&["--net", "net.json", "--weights", "1,1,1,1", "--elite-frac", "0"]), Some(1));
    assert_eq!(solve(&["--net", "net.json", "--weights", "1,1,1,1", "--budget", "0"]), Some(1));
    assert_eq!(csplan(&["frobnicate"], dir.path()).status.code(), Some(1));

    std::fs::write(dir.path().join("bad.json"), "{\"nodes\": 3}").unwrap();
    assert_eq!(solve(&["--net", "bad.json", "--weights", "1,1,1,1"]), Some(1));
}

#[test]
fn iteration_limit_exits_three_and_still_writes() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path());
    let out = csplan(
        &["solve", "--net", "net.json", "--weights", "0.7,0.1,0.1,0.1", "--max-iters", "1", "--out", "runs"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
    let records = RunRecord::load_dir(dir.path().join("runs")).unwrap();
    assert_eq!(records.len(), 1);
    assert_eq!(records[0].trace.len(), 1);
}
