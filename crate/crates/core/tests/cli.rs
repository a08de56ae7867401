use std::path::Path;
use std::process::Command;

use nfvchain::cli::cli_main;
use nfvchain::harness::DETAIL_HEADER;
use nfvchain::model::{check_feasibility, NfvInstance, PlacementSolution, DEFAULT_TOL};
use tempfile::tempdir;

fn run(args: &[&str]) -> i32 {
    cli_main(std::iter::once("nfvchain").chain(args.iter().copied()))
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_then_solve_passes_the_self_check() {
    let dir = tempdir().unwrap();
    let inst_path = dir.path().join("inst.json");
    let sol_path = dir.path().join("sol.json");
    assert_eq!(run(&["generate", "--seed", "4", "--n-servers", "10", "--n-sfcs", "3", "--out", path(&inst_path)]), 0);
    assert_eq!(run(&["solve", "--instance", path(&inst_path), "--solver", "hura", "--out", path(&sol_path)]), 0);

    let inst = NfvInstance::from_json(&std::fs::read_to_string(&inst_path).unwrap()).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&sol_path).unwrap()).unwrap();
    assert_eq!(doc["solver"], "hura");
    assert_eq!(doc["feasible"], true);
    let sol: PlacementSolution = serde_json::from_value(doc["solution"].clone()).unwrap();
    let keep: Vec<usize> =
        doc["accepted"].as_array().unwrap().iter().map(|u| inst.sfc_index(u.as_u64().unwrap() as u32).unwrap()).collect();
    assert!(check_feasibility(&inst.subset(&keep), &sol.subset(&keep), DEFAULT_TOL).unwrap().is_empty());
}

#[test]
fn sweep_writes_detail_and_aggregate() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("sfcs.csv");
    let code = run(&["sweep", "--axis", "n_sfcs", "--values", "1,2", "--snapshots", "3", "--n-servers", "10", "--out", path(&out)]);
    assert_eq!(code, 0);
    let detail = std::fs::read_to_string(&out).unwrap();
    assert_eq!(detail.lines().next().unwrap(), DETAIL_HEADER.join(","));
    assert_eq!(detail.lines().count(), 7);
    let agg = std::fs::read_to_string(dir.path().join("sfcs.aggregate.csv")).unwrap();
    assert_eq!(agg.lines().count(), 3);
}

#[test]
fn mine_one_miner_sums_to_one() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("mine.csv");
    assert_eq!(run(&["mine", "--n-miners", "1", "--seed", "2", "--out", path(&out)]), 0);
    let mut r = csv::Reader::from_path(&out).unwrap();
    let total: f64 = r.records().map(|rec| rec.unwrap()[2].parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() <= 1e-9);
}

#[test]
fn workflow_writes_an_event_log_and_ledger() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("events.csv");
    let ledger = dir.path().join("ledger.csv");
    let code = run(&[
        "workflow",
        "--n-servers",
        "10",
        "--n-sfcs",
        "2",
        "--seed",
        "1",
        "--fault",
        "payment",
        "--ledger",
        path(&ledger),
        "--out",
        path(&out),
    ]);
    assert_eq!(code, 0);
    assert!(std::fs::read_to_string(&out).unwrap().lines().count() > 1);
    assert!(ledger.exists());
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["--help"]), 0);
    assert_eq!(run(&["solve", "--solver", "simplex"]), 2);
    assert_eq!(run(&["frobnicate"]), 2);
    assert_eq!(run(&["sweep", "--axis", "nonsense", "--snapshots", "1"]), 2);
    assert_eq!(run(&["solve", "--instance", "/nonexistent/inst.json"]), 2);
    assert_eq!(run(&["generate", "--n-servers", "2"]), 2);
    let dir = tempdir().unwrap();
    let out = dir.path().join("x.json");
    // No placement meets a nanosecond delay budget.
    assert_eq!(run(&["solve", "--solver", "exact", "--n-servers", "8", "--n-sfcs", "1", "--t-th", "1e-9", "--out", path(&out)]), 1);
}

#[test]
fn binary_reports_the_same_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_nfvchain");
    let dir = tempdir().unwrap();
    let out = dir.path().join("g.json");
    let ok = Command::new(bin).args(["generate", "--seed", "3", "--out", path(&out)]).status().unwrap();
    assert_eq!(ok.code(), Some(0));
    let usage = Command::new(bin).args(["solve", "--bogus"]).output().unwrap();
    assert_eq!(usage.status.code(), Some(2));
}
