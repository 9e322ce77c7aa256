use std::io::Write;
use std::process;

use clap::Parser;
use log::LevelFilter;

use harness_evo::args::Cli;
use harness_evo::error::ExitCode;

const LOG_ENV: &str = "HARNESS_EVO_LOG_LEVEL";

fn init_logging() {
    let (level, bad) = match std::env::var(LOG_ENV).as_deref() {
        Err(_) | Ok("error") => (LevelFilter::Error, None),
        Ok("info") => (LevelFilter::Info, None),
        Ok("debug") => (LevelFilter::Debug, None),
        Ok(other) => (LevelFilter::Error, Some(other.to_string())),
    };
    env_logger::Builder::new().filter_level(level).init();
    if let Some(v) = bad {
        log::error!("{LOG_ENV}={v:?} is not one of error, info, debug; using error");
    }
}

fn main() {
    init_logging();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                ExitCode::Config as i32
            } else {
                0
            };
            let _ = e.print();
            process::exit(code);
        }
    };
    match harness_evo::run(&cli) {
        Ok(outcome) => {
            let mut out = std::io::stdout().lock();
            let _ = out.write_all(outcome.stdout.as_bytes());
            let _ = out.flush();
            process::exit(outcome.exit as i32);
        }
        Err(e) => {
            eprintln!("error: {e}");
            process::exit(e.exit as i32);
        }
    }
}
