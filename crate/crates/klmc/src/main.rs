use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    match klmc::cli::run(klmc::cli::Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("klmc: {e}");
            ExitCode::from(&e)
        }
    }
}
