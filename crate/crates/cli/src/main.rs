mod commands;
mod config;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use commands::{run, CliError};
use config::{Cli, RunConfig, CONFIG_ENV};

const EXIT_RUNTIME: u8 = 1;
const EXIT_DIVERGENT: u8 = 2;
const EXIT_CONFIG: u8 = 3;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (kind, args) = cli.command.split();
    let env_config = std::env::var_os(CONFIG_ENV).map(Into::into);
    let cfg = match RunConfig::resolve(kind, args, env_config) {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("invalid configuration: {msg}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    match run(&cfg) {
        Ok(outcome) => {
            let _ = std::io::stdout().write_all(outcome.stdout.as_bytes());
            let _ = std::io::stdout().flush();
            let _ = std::io::stderr().write_all(outcome.stderr.as_bytes());
            if cfg.strict && outcome.divergent {
                eprintln!("strict: a requested bound diverges");
                ExitCode::from(EXIT_DIVERGENT)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(match e {
                CliError::Config(_) => EXIT_CONFIG,
                CliError::Runtime(_) => EXIT_RUNTIME,
            })
        }
    }
}
