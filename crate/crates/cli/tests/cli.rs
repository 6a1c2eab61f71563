use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_seqprice"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("seqprice-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn read_json(path: &PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn monotone_pipeline() {
    let inst = scratch("mono.json");
    let sol = scratch("mono_sol.json");
    let rep = scratch("mono_run.json");
    let csv = scratch("mono_run.csv");
    let s = |p: &PathBuf| p.to_str().unwrap().to_string();

    let out = run(&["gen", "monotone-lb", "--m", "9", "--eps", "0.01", "--out", &s(&inst)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let file = read_json(&inst);
    let buyers = file["buyers"].as_array().unwrap();
    assert_eq!(buyers.len(), 3);
    assert_eq!(file["m"], 9);
    assert!(buyers.iter().all(|b| b.get("reference").is_some()));

    let out = run(&["solve", "--instance", &s(&inst), "--out", &s(&sol)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let value = read_json(&sol)["value"].as_f64().unwrap();
    assert!(value >= 2.97 - 1e-9, "value {value}");

    let out = run(&[
        "run", "--instance", &s(&inst), "--exante", &s(&sol), "--mechanism", "mono-m2", "--trials", "3000",
        "--seed", "5", "--out", &s(&rep), "--csv", &s(&csv),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&rep);
    assert!(report["max_revenue"].as_f64().unwrap() <= 1.0 + 1e-9);
    let mean = report["mean_revenue"].as_f64().unwrap();
    let ratio = report["ratio"].as_f64().unwrap();
    let ex = report["exante"]["value"].as_f64().unwrap();
    assert!((ratio - ex / mean).abs() <= 1e-9 * ratio);
    let availability = report["availability"].as_array().unwrap();
    assert_eq!(availability.len(), 3);
    for row in availability {
        for a in row.as_array().unwrap() {
            assert!((0.0..=1.0).contains(&a.as_f64().unwrap()));
        }
    }
    let lines = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(lines.lines().next(), Some("trial,revenue"));
    assert_eq!(lines.lines().count(), 3001);
}

#[test]
fn same_seed_same_bytes() {
    let gen = |seed: &str| run(&["gen", "coverage", "--m", "3", "--n", "2", "--seed", seed]).stdout;
    assert_eq!(gen("7"), gen("7"));
    assert_ne!(gen("7"), gen("8"));

    let inst = scratch("cov.json");
    std::fs::write(&inst, gen("7")).unwrap();
    let p = inst.to_str().unwrap();
    let go = || run(&["run", "--instance", p, "--mechanism", "ocrs-seq", "--trials", "500", "--seed", "11"]);
    let (a, b) = (go(), go());
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn exit_codes() {
    let out = run(&["--json", "run", "--instance", "/nonexistent/x.json", "--mechanism", "gs"]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "usage");

    assert_eq!(run(&["run", "--no-such-flag"]).status.code(), Some(2));

    let inst = scratch("mono_gs.json");
    let out = run(&["gen", "monotone-lb", "--m", "4", "--out", inst.to_str().unwrap()]);
    assert!(out.status.success());
    let out = run(&["run", "--instance", inst.to_str().unwrap(), "--mechanism", "gs", "--trials", "10"]);
    assert_eq!(out.status.code(), Some(1));

    let out = run(&["verify", "--suite", "hull", "--quick"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("PASS"));
}

#[test]
fn bench_csv() {
    let out = run(&["bench", "--sizes", "2", "--instances", "1", "--trials", "300", "--family", "coverage"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("m,n,instance,family,ea_rev,revenue"));
    let cols: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(cols[0], "2");
    assert_eq!(cols[3], "coverage");
    assert_eq!(cols[11], "0");
}
