use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use env_logger::Env;
use flatgen::{csvio, generate, presets, verify, Overrides, RunConfig, RunError};
use log::debug;

/// Flatness-based trajectory generation for multirotors with tilted
/// propellers.
#[derive(Parser)]
#[command(name = "flatgen", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for attitude and thrusts along a rest-to-rest trajectory and
    /// write the history as CSV
    Generate(Overrides),
    /// Replay a generated CSV and re-check its residuals
    Verify {
        #[command(flatten)]
        run: Overrides,
        /// CSV written by `generate`
        csv: PathBuf,
    },
    /// List the preset vehicles
    Presets,
}

/// Writes to stdout; a closed pipe (as with `| head`) is not an error.
fn emit(text: &str) -> Result<(), RunError> {
    match io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(RunError::Io(e.to_string())),
        _ => Ok(()),
    }
}

fn run_generate(flags: &Overrides) -> Result<bool, RunError> {
    let cfg = RunConfig::resolve(flags)?;
    if let Some(seed) = flags.seed {
        debug!("seed {seed} ignored: every solver is deterministic");
    }
    let (traj, flat, summary) = generate(&cfg)?;
    let io_err = |e: io::Error| RunError::Io(e.to_string());
    match &cfg.out {
        Some(path) => {
            let file =
                File::create(path).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
            csvio::write(
                BufWriter::new(file),
                &traj,
                &flat,
                &cfg.vehicle,
                cfg.tilt_pair,
            )?;
            emit(&summary.to_string())?;
        }
        None => {
            csvio::write(
                io::stdout().lock(),
                &traj,
                &flat,
                &cfg.vehicle,
                cfg.tilt_pair,
            )?;
            eprint!("{summary}");
        }
    }
    match io::stdout().flush() {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => return Err(io_err(e)),
        _ => {}
    }
    Ok(summary.pass)
}

fn run_verify(flags: &Overrides, csv: &PathBuf) -> Result<bool, RunError> {
    let cfg = RunConfig::resolve(flags)?;
    let file = File::open(csv).map_err(|e| RunError::Io(format!("{}: {e}", csv.display())))?;
    let traj = csvio::read(BufReader::new(file))?;
    let summary = verify(&cfg, &traj)?;
    emit(&summary.to_string())?;
    Ok(summary.pass)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(Env::new().filter_or("FLATGEN_LOG", "warn")).init();
    // usage errors share the config-error exit code
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Generate(flags) => run_generate(flags),
        Command::Verify { run, csv } => run_verify(run, csv),
        Command::Presets => emit(&presets()).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("flatgen: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
