use std::process::ExitCode;

use clap::Parser;
use surfdraw_cli::cli::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match surfdraw_cli::run(&cli) {
        Ok(manifest) => {
            for f in &manifest.failures {
                eprintln!("failed: {f}");
            }
            if manifest.succeeded {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
