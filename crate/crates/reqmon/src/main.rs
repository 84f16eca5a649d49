use std::process::ExitCode;

use clap::Parser;

use reqmon::cli::{run, Cli, Outcome};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(Outcome::Clean) => ExitCode::SUCCESS,
        Ok(Outcome::Findings) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            for d in &e.diagnostics {
                eprintln!("  {d}");
            }
            ExitCode::from(2)
        }
    }
}
