//! Acceptance checks, one at a time so the timing budgets are not
//! distorted by each other. Prints one PASS/FAIL line per check and exits
//! nonzero if any fails. `cargo test --test acceptance -- 3,5` runs a subset.

use std::process::ExitCode;

use gapcount_core::acceptance;

fn main() -> ExitCode {
    let only: Vec<usize> = std::env::args()
        .skip(1)
        .flat_map(|a| a.split(',').filter_map(|s| s.trim().parse().ok()).collect::<Vec<_>>())
        .collect();
    let mut failed = 0;
    let mut ran = 0;
    for (i, check) in acceptance::all().into_iter().enumerate() {
        if !only.is_empty() && !only.contains(&(i + 1)) {
            continue;
        }
        let outcome = check();
        println!("{outcome}");
        ran += 1;
        if !outcome.passed {
            failed += 1;
        }
    }
    println!("acceptance: {}/{ran} passed", ran - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
