use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = match hvbell::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage errors are malformed input.
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match hvbell::run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(hvbell::exit_code(&e))
        }
    }
}
