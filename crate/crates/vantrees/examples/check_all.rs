//! Run the full self-check suite and print one line per verified identity.
//!
//! The same suite backs `vantrees check-all`; here it runs with default
//! settings so the output doubles as a quick health report for the crate.

use vantrees::cli::{check_all, RunConfig};

fn main() {
    let config = RunConfig::default_for_checks();
    let report = check_all(&config);
    for row in &report.rows {
        println!(
            "[{}] {:<40} value {:>12.3e}  threshold {:>9.1e}  ({})",
            if row.passed { "pass" } else { "FAIL" },
            row.name,
            row.value,
            row.threshold,
            row.anchor,
        );
        if let Some(note) = &row.note {
            println!("       note: {note}");
        }
    }
    let passed = report.rows.iter().filter(|r| r.passed).count();
    println!("{passed}/{} checks passed", report.rows.len());
    std::process::exit(if report.all_pass() { 0 } else { 2 });
}
