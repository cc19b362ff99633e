mod cli;
mod commands;
mod config;
mod error;
mod provenance;

use std::ffi::OsString;

use clap::error::ErrorKind;
use clap::Parser;

use crate::cli::Cli;
use crate::commands::Context;
use crate::error::CliError;

fn main() {
    let argv: Vec<OsString> = std::env::args_os().collect();
    std::process::exit(run(argv));
}

fn run(argv: Vec<OsString>) -> i32 {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CHRONOVEC_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    let args: Vec<String> = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    let result = Context::new(cli.global, args).and_then(|mut ctx| commands::run(&mut ctx, cli.command));
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Usage(_) = e {
                eprintln!("\nFor more information, try '--help'.");
            }
            e.exit_code()
        }
    }
}
