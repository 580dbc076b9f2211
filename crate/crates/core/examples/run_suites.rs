//! Developer harness: run every suite with default counts and print a line
//! per suite. (The acceptance integration test is the authoritative runner.)
use quiver_workbench::suite::{run_all, RunConfig};

fn main() {
    let config = RunConfig::default();
    let mut ok = true;
    for report in run_all(&config) {
        println!(
            "{:18} cases={:4} passed={:4} failed={}",
            report.suite, report.cases_run, report.passed, report.failed
        );
        if !report.all_passed() {
            ok = false;
            for f in report.failures.iter().take(2) {
                println!("    failure[{}]: {:?}", f.index, f.detail);
            }
        }
    }
    std::process::exit(if ok { 0 } else { 1 });
}
