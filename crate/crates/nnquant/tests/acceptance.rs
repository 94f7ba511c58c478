//! One line per acceptance check; exits nonzero if any fails.

use std::process::ExitCode;

fn main() -> ExitCode {
    // `cargo test -- --list` and filtered runs expect no work here
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let mut failed = 0;
    for outcome in nnquant::verify::run_all() {
        println!("{outcome}");
        failed += usize::from(!outcome.passed);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        nnquant::verify::ALL.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
