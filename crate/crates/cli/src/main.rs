//! Command-line front-end: dataset generation, training, the sample-size
//! sweep and bound verification.
//!
//! Exit codes: 0 success, 1 invalid config, 2 runtime or numeric failure,
//! 3 verification violations.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::ConfigError;

#[derive(Parser)]
#[command(name = "deferral", version, about = "Learning-to-defer surrogates: data, training, sweeps and bound checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON config; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Master seed; overrides the config's `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Generate a dataset or a random finite task.
    GenData,
    /// Train a scorer on a dataset.
    Train,
    /// Sweep training sample sizes on the realizable mixture.
    Sweep,
    /// Run a bound-verification suite.
    Verify,
}

fn run(cli: &Cli) -> anyhow::Result<u8> {
    let cfg = cli.config.as_deref();
    let out = &cli.out;
    match cli.command {
        Command::GenData => {
            let (c, _) = config::load(cfg)?;
            commands::gen_data(c, cli.seed, out)
        }
        Command::Train => {
            if cfg.is_none() {
                return Err(config::invalid("train needs --config naming a dataset and loss"));
            }
            let (c, base) = config::load(cfg)?;
            commands::train_cmd(c, &base, cli.seed, out)
        }
        Command::Sweep => {
            let (c, _) = config::load(cfg)?;
            commands::sweep(c, cli.seed, out)
        }
        Command::Verify => {
            let (c, base) = config::load(cfg)?;
            commands::verify(c, &base, cli.seed, out)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = deferral::exec::with_jobs(cli.jobs, || run(&cli));
    match result {
        Ok(Ok(code)) => ExitCode::from(code),
        Ok(Err(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if e.downcast_ref::<ConfigError>().is_some() { 1 } else { 2 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
