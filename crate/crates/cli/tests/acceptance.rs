use std::process::ExitCode;

use twopt_cli::suites::{run, CRITERIA};

fn main() -> ExitCode {
    let mut failed = 0;
    for id in 1..=CRITERIA {
        let result = run(id);
        println!("{result}");
        if !result.passed {
            failed += 1;
        }
    }
    println!("{} of {CRITERIA} criteria passed", CRITERIA - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
