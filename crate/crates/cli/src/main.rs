//! `riskbench` command-line entry point.
//!
//! Machine-readable results go to stdout as JSON. Failures print a single
//! JSON line `{"error":{"code":..,"message":..}}` on stderr and exit with 1
//! for user errors or 2 for internal ones.

mod args;
mod commands;
mod error;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use args::Cli;
use error::CliError;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let usage = e.render().to_string();
            let message = usage.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            eprint!("{usage}");
            if !usage.contains("Usage:") {
                eprintln!("\n{}", args::usage());
            }
            return report(&CliError::usage(message));
        }
    };
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_max_level(log_level())
        .init();
    match commands::run(cli) {
        Ok(value) => {
            let mut stdout = std::io::stdout().lock();
            let text = serde_json::to_string_pretty(&value).expect("output serializes");
            if writeln!(stdout, "{text}").is_err() {
                return ExitCode::from(2);
            }
            ExitCode::SUCCESS
        }
        Err(e) => report(&e),
    }
}

fn log_level() -> tracing_subscriber::filter::LevelFilter {
    std::env::var("RISKBENCH_LOG")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(tracing_subscriber::filter::LevelFilter::WARN)
}

fn report(error: &CliError) -> ExitCode {
    eprintln!("{}", error.to_json_line());
    ExitCode::from(error.exit_code())
}
