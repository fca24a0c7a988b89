use std::process::ExitCode;

use clap::Parser;

mod args;
mod commands;
mod output;

use args::RunConfig;
use output::Failure;

fn main() -> ExitCode {
    let config = RunConfig::parse();
    match run(config) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("framepath: {failure}");
            ExitCode::from(failure.exit_code())
        }
    }
}

fn run(mut config: RunConfig) -> Result<(), Failure> {
    config.apply_env()?;
    if let Some(threads) = config.global.threads {
        if threads == 0 {
            return Err(Failure::Precondition("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure::Precondition(format!("cannot size the thread pool: {e}")))?;
    }
    let rendered = commands::dispatch(&config)?;
    output::emit(config.global.out.as_deref(), &rendered)
}
