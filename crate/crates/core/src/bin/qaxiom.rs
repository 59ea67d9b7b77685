use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use qaxiom::cli::{emit, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let outcome = match run(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    if let Err(e) = emit(&cli, &outcome) {
        eprintln!("error: cannot write report: {e}");
        return ExitCode::from(2);
    }
    eprintln!("{} [{:.3}s]", outcome.summary, start.elapsed().as_secs_f64());
    if outcome.passed {
        ExitCode::SUCCESS
    } else {
        eprintln!("threshold violated");
        ExitCode::FAILURE
    }
}
