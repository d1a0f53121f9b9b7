//! Acceptance gate: runs the full criterion battery and prints one
//! pass/fail line per criterion. Fails if any criterion fails or the suite
//! exceeds its runtime budget.

use std::time::Instant;

#[test]
fn acceptance_criteria() {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let outcome = morrey_lab::suite::run_suite(dir.path()).expect("suite must run");
    let elapsed = start.elapsed().as_secs_f64();

    for c in &outcome.criteria {
        println!(
            "criterion {:2} [{}] {} — {}",
            c.index,
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    println!("total: {elapsed:.1}s");

    assert_eq!(outcome.criteria.len(), 13);
    let failures: Vec<String> = outcome
        .criteria
        .iter()
        .filter(|c| !c.pass)
        .map(|c| format!("{} ({})", c.name, c.detail))
        .collect();
    assert!(failures.is_empty(), "failed criteria: {failures:?}");
    assert!(elapsed < 600.0, "suite exceeded 10 minutes: {elapsed:.1}s");
}
