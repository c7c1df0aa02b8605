use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cuspflow_cli::config::ExperimentConfig;
use cuspflow_cli::{replay, run, schema};

#[derive(Parser)]
#[command(name = "cuspflow", version, about = "Contracting-cusp Ricci flow sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve every k in the config and write a run directory.
    Run {
        config: PathBuf,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: config, then all cores).
        #[arg(long, env = "CUSPFLOW_THREADS")]
        threads: Option<usize>,
    },
    /// Recompute every check from a run directory's snapshots.
    ReplayVerify { dir: PathBuf },
    /// Print the run-directory file layouts.
    PrintSchema,
}

/// 0: everything passed, 1: some verification entry failed, 2: error.
fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> anyhow::Result<bool> {
    match command {
        Command::Run { config, out, threads } => {
            let (mut cfg, text) = ExperimentConfig::load(&config)?;
            if let Some(dir) = out {
                cfg.output_dir = dir;
            }
            if threads.is_some() {
                cfg.threads = threads;
            }
            let outcome = run::run(&cfg, &text)?;
            print!("{}", run::render_summary(&outcome));
            println!("run directory: {}", outcome.dir.display());
            Ok(outcome.all_pass)
        }
        Command::ReplayVerify { dir } => {
            let members = replay::replay_verify(&dir)?;
            let mut ok = true;
            for m in &members {
                let status = if m.matches() { "matches stored report" } else { "DIFFERS from stored report" };
                println!("k = {}: {status}", m.k);
                print!("{}", m.replayed.render_table());
                ok &= m.matches() && m.replayed.all_pass();
            }
            Ok(ok)
        }
        Command::PrintSchema => {
            print!("{}", schema::SCHEMA);
            Ok(true)
        }
    }
}
