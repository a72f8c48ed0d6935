mod commands;
mod job;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use job::{Command, JobSpec};

/// Tempered solutions of `z^N u′ + A(z) u = g` near an irregular singular point.
///
/// Exit status: 0 solved or consistent, 1 input error, 2 partial or
/// inconsistent, 3 hypothesis violated, 4 numeric failure.
#[derive(Debug, Parser)]
#[command(name = "sectoria", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// Job file (JSON).
    #[arg(long)]
    spec: PathBuf,
    /// Output directory; overrides the job file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed; overrides the job file.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let res = JobSpec::load(&args.spec, args.command, args.out, args.seed).and_then(|job| commands::run(&job));
    match res {
        Ok(code) => ExitCode::from(code as u8),
        Err(f) => {
            eprintln!("sectoria: {f}");
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
