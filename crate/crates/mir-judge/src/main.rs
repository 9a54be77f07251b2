//! Thin command-line front end over the library.
//!
//! Exit codes: 0 success, 1 config error, 2 partial failure with persisted
//! partial artifacts.

use clap::{Args, Parser, Subcommand};
use mir_judge::corpus::{generate_synthetic_corpus, SyntheticSpec};
use mir_judge::runner::{
    corpus_statistics, regenerate_report, run_experiment, ExperimentConfig, RunnerError,
};
use mir_judge::Task;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "mir-judge", version, about = "Annotation error-detection evaluation harness for symbolic music")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment end to end from a config file.
    Run(RunArgs),
    /// Generate a synthetic corpus in the standard layout.
    GenCorpus(GenCorpusArgs),
    /// Print corpus statistics (notes, labels, mean tokens per call).
    Stats(StatsArgs),
    /// Regenerate report files from a finished run's archive.
    Report(ReportArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the global seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the judge kind: oracle, random, or remote.
    #[arg(long)]
    judge: Option<String>,
    /// Override the augmentation levels (comma-separated slugs).
    #[arg(long)]
    level: Option<String>,
    /// Override the task: beat, chord, or key.
    #[arg(long)]
    task: Option<String>,
    /// Override the response cache directory.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    /// Override where corruption logs are written.
    #[arg(long)]
    log_out: Option<PathBuf>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenCorpusArgs {
    /// Output corpus directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 4)]
    pieces: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 80.0)]
    tempo_min: f64,
    #[arg(long, default_value_t = 140.0)]
    tempo_max: f64,
    /// Piece duration in seconds.
    #[arg(long, default_value_t = 60.0)]
    duration: f64,
}

#[derive(Args)]
struct StatsArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the task: beat, chord, or key.
    #[arg(long)]
    task: Option<String>,
    /// Override the global seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ReportArgs {
    /// A finished run directory (holds config.resolved.toml + archives).
    #[arg(long)]
    run_dir: PathBuf,
}

fn apply_run_overrides(config: &mut ExperimentConfig, args: &RunArgs) -> Result<(), RunnerError> {
    if let Some(seed) = args.seed {
        config.experiment.seed = seed;
    }
    if let Some(judge) = &args.judge {
        config.judge.kind = judge.clone();
    }
    if let Some(levels) = &args.level {
        config.experiment.levels =
            levels.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
    }
    if let Some(task) = &args.task {
        config.experiment.task = Task::parse(task)
            .ok_or_else(|| RunnerError::Config(format!("unknown task {task:?}")))?;
    }
    if let Some(cache_dir) = &args.cache_dir {
        config.experiment.cache_dir = Some(cache_dir.clone());
    }
    if let Some(log_out) = &args.log_out {
        config.experiment.log_out = Some(log_out.clone());
    }
    if let Some(out) = &args.out {
        config.experiment.output_dir = out.clone();
    }
    Ok(())
}

fn run(args: &RunArgs) -> Result<(), RunnerError> {
    let mut config = ExperimentConfig::from_toml_file(&args.config)?;
    apply_run_overrides(&mut config, args)?;
    let report = run_experiment(&config)?;
    println!(
        "run complete: task={} judge={} levels={} calls={}",
        report.task,
        report.judge_id,
        report.levels.len(),
        report.levels.iter().map(|l| l.calls).sum::<usize>(),
    );
    println!("report written to {}", config.experiment.output_dir.display());
    Ok(())
}

fn gen_corpus(args: &GenCorpusArgs) -> Result<(), RunnerError> {
    let spec = SyntheticSpec {
        pieces: args.pieces,
        tempo_min: args.tempo_min,
        tempo_max: args.tempo_max,
        duration: args.duration,
    };
    generate_synthetic_corpus(&spec, args.seed, &args.out)?;
    println!("wrote {} pieces to {}", args.pieces, args.out.display());
    Ok(())
}

fn stats(args: &StatsArgs) -> Result<(), RunnerError> {
    let mut config = ExperimentConfig::from_toml_file(&args.config)?;
    if let Some(task) = &args.task {
        config.experiment.task = Task::parse(task)
            .ok_or_else(|| RunnerError::Config(format!("unknown task {task:?}")))?;
    }
    if let Some(seed) = args.seed {
        config.experiment.seed = seed;
    }
    let stats = corpus_statistics(&config)?;
    println!("task: {}", config.experiment.task);
    println!("#Notes             {}", stats.note_count);
    println!("#Labels            {}", stats.label_count);
    println!("#Tokens (per call) {:.2}", stats.mean_tokens_per_call);
    if stats.empty_corpus {
        println!("warning: empty corpus");
    }
    Ok(())
}

fn report(args: &ReportArgs) -> Result<(), RunnerError> {
    let report = regenerate_report(&args.run_dir)?;
    println!(
        "report regenerated: task={} judge={} levels={}",
        report.task,
        report.judge_id,
        report.levels.len()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(args) => run(args),
        Command::GenCorpus(args) => gen_corpus(args),
        Command::Stats(args) => stats(args),
        Command::Report(args) => report(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            if err.is_partial() {
                eprintln!("partial results were persisted to the output directory");
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
