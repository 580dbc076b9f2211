//! Acceptance suite: one test per criterion, each running its property
//! suite at the mandated instance count with zero tolerance (all checks are
//! exact) and printing a pass/fail line. Run with `--nocapture` to see every
//! line; the `qwb suite` subcommand prints the same reports.

use quiver_workbench::suite::{run_suite, Report, RunConfig};

fn config() -> RunConfig {
    RunConfig {
        seed: 1,
        cases: 0, // suite defaults carry the mandated counts
        max_n: 4,
        max_dim: 3,
        include_timing: false,
    }
}

fn gate(number: usize, label: &str, suite: &str, min_cases: usize) -> Report {
    let report = run_suite(&config(), suite).expect("registered suite");
    let verdict = if report.all_passed() && report.cases_run >= min_cases {
        "PASS"
    } else {
        "FAIL"
    };
    println!(
        "ACCEPTANCE {number} ({label}): {verdict} — {}/{} cases",
        report.passed, report.cases_run
    );
    for failure in report.failures.iter().take(3) {
        println!("  case {}: {:?}", failure.index, failure.detail);
    }
    assert!(
        report.cases_run >= min_cases,
        "criterion {number} ran {} cases, needs at least {min_cases}",
        report.cases_run
    );
    assert!(
        report.all_passed(),
        "criterion {number} ({label}) failed {} of {} cases",
        report.failed,
        report.cases_run
    );
    report
}

#[test]
fn criterion_1_triple_form_rank_identity() {
    gate(1, "triple-form rank identity", "triple-rank", 200);
}

#[test]
fn criterion_2_signature_structure() {
    gate(2, "signature structure", "triple-signature", 200);
}

#[test]
fn criterion_3_maslov_z2_structure() {
    gate(3, "Maslov Z/2 structure", "maslov", 20);
}

#[test]
fn criterion_4_delta_full_faithfulness() {
    gate(4, "delta full faithfulness", "delta-ff", 100);
}

#[test]
fn criterion_5_vanishing_cycle_functoriality() {
    gate(5, "vanishing-cycle functoriality", "vc-functor", 100);
}

#[test]
fn criterion_6_descent_and_gluing() {
    gate(6, "descent and gluing", "descent-glue", 50);
}

#[test]
fn criterion_7_stalkwise_detection() {
    // 30 planted positives and 30 planted negatives
    gate(7, "stalkwise weak-iso detection", "weak-iso", 60);
}

#[test]
fn criterion_8_melded_consistency() {
    // 100 family validations plus 50 empty-model oracle comparisons
    gate(8, "melded consistency", "melded", 150);
}

#[test]
fn criterion_9_no_variation_base_case() {
    // 100 zero-block base cases plus 50 labeled surrogate verdicts
    gate(9, "no-variation base case", "no-variation", 150);
}
