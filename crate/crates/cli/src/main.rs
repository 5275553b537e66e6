//! `finder`: simulate a city, train the query classifier, rank restaurants
//! and evaluate the resulting inspections.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use finder_core::pipeline::{run_pipeline, steps, ErrorKind, PipelineError, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "finder", version, about = "Foodborne-illness surveillance pipeline over a simulated city")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate the city and write the dataset.
    Simulate(Opts),
    /// Train the query classifier on weak labels.
    TrainWsm(Opts),
    /// Score the classifier against simulated rater labels.
    EvalWsm(Opts),
    /// Link, aggregate, release and rank; write the daily lists.
    Rank(Opts),
    /// Inspect the ranked restaurants.
    Inspect(Opts),
    /// Build the risk, precision and adjusted-means tables.
    Evaluate(Opts),
    /// Print the summary of an artifact directory.
    Report(Opts),
    /// Run every stage.
    Run(Opts),
    /// Print the effective configuration.
    Config(Opts),
}

#[derive(Args, Debug)]
struct Opts {
    /// Config file of `key=value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Global seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Artifact directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Simulated days.
    #[arg(long)]
    days: Option<u32>,
}

fn usage(message: String) -> PipelineError {
    PipelineError::new("config", ErrorKind::Usage, message)
}

/// Config file, then `--set` overrides, then the dedicated flags. Later
/// stages fall back to the config.txt a previous `simulate` wrote.
fn resolve(opts: &Opts, reuse_saved: bool) -> Result<RunConfig, PipelineError> {
    let mut cfg = match &opts.config {
        Some(path) => RunConfig::load(path)?,
        None => {
            let dir = opts.out.clone().unwrap_or_else(|| RunConfig::default().output_dir);
            let saved = dir.join("config.txt");
            if reuse_saved && saved.is_file() {
                RunConfig::load(&saved)?
            } else {
                RunConfig::default()
            }
        }
    };
    for pair in &opts.set {
        let (key, value) = pair.split_once('=').ok_or_else(|| usage(format!("expected KEY=VALUE, got {pair:?}")))?;
        cfg.set(key.trim(), value.trim())?;
    }
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &opts.out {
        cfg.output_dir = out.clone();
    }
    if let Some(days) = opts.days {
        cfg.sim.days = days;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn dispatch(command: &Command) -> Result<(), PipelineError> {
    match command {
        Command::Simulate(o) => steps::simulate(&resolve(o, false)?),
        Command::TrainWsm(o) => steps::train_wsm(&resolve(o, true)?),
        Command::EvalWsm(o) => steps::eval_wsm(&resolve(o, true)?),
        Command::Rank(o) => steps::rank(&resolve(o, true)?),
        Command::Inspect(o) => steps::inspect(&resolve(o, true)?),
        Command::Evaluate(o) => steps::evaluate(&resolve(o, true)?),
        Command::Report(o) => {
            print!("{}", steps::report(&resolve(o, true)?)?);
            Ok(())
        }
        Command::Run(o) => {
            let cfg = resolve(o, false)?;
            run_pipeline(&cfg)?;
            print!("{}", std::fs::read_to_string(cfg.output_dir.join("report.txt")).unwrap_or_default());
            Ok(())
        }
        Command::Config(o) => {
            print!("{}", resolve(o, false)?.to_text());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
