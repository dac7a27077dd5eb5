use std::process::ExitCode;

use clap::Parser;
use steklov_core::cli::{self, RunConfig};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = match cli::expand_config(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let config = match RunConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let outcome = match cli::run(&config) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(cli::exit_code(&e) as u8);
        }
    };
    if let Err(e) = cli::emit(&outcome.records, config.format, config.output.as_deref()) {
        eprintln!("error: {e}");
        return ExitCode::from(cli::exit_code(&e) as u8);
    }
    for note in &outcome.notes {
        eprintln!("{note}");
    }
    if outcome.failed_checks.is_empty() {
        ExitCode::SUCCESS
    } else {
        for name in &outcome.failed_checks {
            eprintln!("check failed: {name}");
        }
        ExitCode::from(4)
    }
}
