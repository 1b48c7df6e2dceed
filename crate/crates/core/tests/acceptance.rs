//! The eleven acceptance criteria, one PASS/FAIL line each. Runs without
//! the libtest harness so the lines are never captured.

use std::process::ExitCode;

use hicontrast::studies::{criterion, CRITERIA};

fn main() -> ExitCode {
    let mut failed = vec![];
    for id in 1..=CRITERIA.len() {
        let o = criterion(id);
        println!("criterion {:>2} {} [{}] ({:.2}s)", o.id, if o.pass { "PASS" } else { "FAIL" }, o.name, o.seconds);
        for d in o.detail.split("; ") {
            println!("    {d}");
        }
        if !o.pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria PASS", CRITERIA.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: FAILED criteria {failed:?}");
        ExitCode::FAILURE
    }
}
