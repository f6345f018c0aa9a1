use std::process::ExitCode;

use cecib::cli::{cli_run, Args, RunManifest};
use clap::Parser;

fn main() -> ExitCode {
    let manifest = RunManifest::from(Args::parse());
    match cli_run(&manifest) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.class());
            ExitCode::FAILURE
        }
    }
}
