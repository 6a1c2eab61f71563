//! Acceptance criteria 1 to 11, run in sequence so the runtime limits are
//! measured without other tests competing for the CPU. Each criterion
//! prints one PASS/FAIL line; the test fails if any criterion does.

use std::io::Write;
use std::time::{Duration, Instant};

use seqprice::experiments::{bench, BenchConfig};
use seqprice::suites::{self, SuiteReport};

const SEED: u64 = 20_251_016;

struct Outcome {
    id: usize,
    passed: bool,
    line: String,
}

fn judge(id: usize, limit: Duration, reports: Vec<SuiteReport>) -> Outcome {
    let elapsed: Duration = reports.iter().map(|r| r.elapsed).sum();
    let checks: usize = reports.iter().map(|r| r.checks).sum();
    let ok = reports.iter().all(SuiteReport::passed) && elapsed <= limit;
    let mut line = format!(
        "criterion {id:>2}: {} ({checks} checks, {:.2}s of {}s)",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    for r in &reports {
        line += &format!("\n    {}", r.name);
        for n in &r.notes {
            line += &format!("\n      {n}");
        }
        for f in r.failures.iter().take(5) {
            line += &format!("\n      failed: {f}");
        }
    }
    Outcome { id, passed: ok, line }
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

/// Ratio report plus the pipeline's hard checks: every transcript feasible
/// (enforced inside the simulation) and every verifier passing.
fn criterion_10() -> Outcome {
    let start = Instant::now();
    let config = BenchConfig {
        seed: SEED,
        ..BenchConfig::default()
    };
    let mut ok = true;
    let mut line = String::new();
    match bench(&config) {
        Ok(rows) => {
            for r in &rows {
                let good = r.verifier_failures == 0 && r.ratio.is_finite();
                ok &= good;
                line += &format!(
                    "\n    m={} {:?}: EARev {:.4}, revenue {:.4} ± {:.4}, ratio {:.2}, verifiers {}/{}",
                    r.m,
                    r.family,
                    r.ea_rev,
                    r.revenue,
                    r.stderr,
                    r.ratio,
                    r.verifier_checks - r.verifier_failures,
                    r.verifier_checks
                );
            }
        }
        Err(e) => {
            ok = false;
            line += &format!("\n    failed: {e}");
        }
    }
    let ocrs = suites::ocrs_subadditive(SEED ^ 10, 50);
    ok &= ocrs.passed();
    line += &format!("\n    {}: {} checks, {} failures", ocrs.name, ocrs.checks, ocrs.failures.len());
    let elapsed = start.elapsed();
    Outcome {
        id: 10,
        passed: ok,
        line: format!(
            "criterion 10: {} ({:.2}s){line}",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        ),
    }
}

#[test]
fn acceptance() {
    let outcomes = vec![
        judge(1, secs(5), vec![suites::hull_random(SEED ^ 1, 200)]),
        judge(2, secs(5), vec![suites::hull_gs_exact(SEED ^ 2, 100)]),
        judge(3, secs(30), vec![suites::rrs_subadditive(SEED ^ 3, 100)]),
        judge(4, secs(30), vec![suites::gs_rrs_ocrs(SEED ^ 4, 100)]),
        judge(5, secs(120), vec![suites::gs_halving(SEED ^ 5, 20, 100_000)]),
        judge(6, secs(60), vec![suites::availability(SEED ^ 6, 10_000)]),
        judge(7, secs(60), vec![suites::xos_lb(SEED ^ 7)]),
        judge(8, secs(120), vec![suites::monotone_lb(SEED ^ 8, &[2, 3, 5, 7], 10_000)]),
        judge(9, secs(120), vec![suites::rrs_lb(&[10, 17, 26], 25)]),
        criterion_10(),
        judge(11, secs(30), vec![suites::demand_ground_truth(SEED ^ 11, 1000)]),
    ];
    // Written to the stderr handle directly so the lines show up even when
    // the harness captures output.
    let mut err = std::io::stderr().lock();
    for o in &outcomes {
        writeln!(err, "{}", o.line).unwrap();
    }
    drop(err);
    let failed: Vec<usize> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
