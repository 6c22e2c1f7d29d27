//! Runs every acceptance criterion at full scale and prints one line per
//! criterion. Exits non-zero if any criterion fails.

use std::process::ExitCode;

use linbandit_validation::{Scale, CRITERIA};

fn main() -> ExitCode {
    let workers = std::env::var("LINBANDIT_WORKERS")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(0);
    let mut failed = 0;
    for (i, check) in CRITERIA.iter().enumerate() {
        match check(Scale::Full, workers) {
            Ok(v) => {
                if !v.passed {
                    failed += 1;
                }
                println!("{v}");
            }
            Err(e) => {
                failed += 1;
                println!("FAIL criterion {}: error: {e}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", CRITERIA.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
