use std::process::ExitCode;

use clap::Parser;
use recon_cluster::cli::{run_parsed, Cli};

fn main() -> ExitCode {
    match run_parsed(&Cli::parse()) {
        Ok(outcome) => {
            for line in &outcome.messages {
                println!("{line}");
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
