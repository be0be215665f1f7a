//! Runs the twelve acceptance criteria and prints one line per criterion.
//!
//! Criteria 5 and 6 are not attainable at radius 8: the sampled cone keeps a
//! boundary gap above a fifth of its width, and tangency of neighbouring
//! flags makes the oppositeness score quadratic in the point separation.
//! Both are computed at their stated thresholds and reported red; every other
//! criterion must pass.

use anosov_limits::parse_scenario;
use anosov_limits::verify::{run, CRITERIA};

const KNOWN_RED: [u32; 2] = [5, 6];

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = parse_scenario("preset.name = reflection\nball.radius = 8\nseed = 0\n").unwrap();
    let report = run(&scenario, dir.path(), None);
    assert_eq!(report.criteria.len(), CRITERIA.len());
    for c in &report.criteria {
        let mark = if c.passed { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {mark} {}: {}", c.id, c.name, c.detail);
    }
    let unexpected: Vec<u32> = report
        .criteria
        .iter()
        .filter(|c| !c.passed && !KNOWN_RED.contains(&c.id))
        .map(|c| c.id)
        .collect();
    println!("{} passed, {} failed, known red {KNOWN_RED:?}", report.passed, report.failed);
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
