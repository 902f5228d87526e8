use std::process::ExitCode;

use topopt::{execute, parse_args, CliError};

fn main() -> ExitCode {
    let settings = match parse_args(std::env::args().skip(1)) {
        Ok(s) => s,
        Err(CliError::Args(e)) => e.exit(),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match execute(&settings) {
        Ok((result, bundle)) => {
            if !settings.quiet {
                let status = if result.converged { "converged" } else { "stopped at maxit" };
                println!("{status} after {} iterations; results in {}", result.history.len(), settings.out.display());
                let _ = bundle;
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
