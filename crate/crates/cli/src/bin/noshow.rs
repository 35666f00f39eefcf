use std::process::ExitCode;

use clap::Parser;
use noshow_cli::app::{run, Cli};

fn main() -> ExitCode {
    ExitCode::from(run(Cli::parse()))
}
