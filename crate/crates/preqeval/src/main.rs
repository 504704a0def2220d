use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use preqeval::config::{parse_config, ExperimentKind};
use preqeval::{emit_curves, load_run, resolve_out_dir, run, verify, AppError};

#[derive(Parser)]
#[command(
    name = "preqeval",
    version,
    about = "Online-codelength evaluation for probabilistic learners"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Measure online codelength on one dataset.
    Codelength(RunArgs),
    /// Encode labels into a portable bitstream.
    Compress(RunArgs),
    /// Decode labels back out of a bitstream.
    Decompress(RunArgs),
    /// Trace held-out accuracy against examples seen.
    Curve(RunArgs),
    /// Train through a sequential task schedule.
    Continual(RunArgs),
    /// Train on a random mixture of tasks.
    Multitask(RunArgs),
    /// Score every trained variant on every variant's eval split.
    CrossMatrix(RunArgs),
    /// Pretrain on a mixture, then price a held-out target task.
    PretrainFinetune(RunArgs),
    /// Rebuild the seed-aggregated CSVs of a completed run.
    Curves(VerifyArgs),
    /// Re-execute one recorded seed and insist on identical bytes.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment description (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Re-execute even if a completed run exists.
    #[arg(long)]
    force: bool,
    /// Worker threads for seed execution.
    #[arg(long, default_value_t = 4)]
    workers: usize,
    /// Output root (overrides the config and PREQEVAL_OUT).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Experiment description (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output root (overrides the config and PREQEVAL_OUT).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, AppError> {
    let (kind, args) = match cli.command {
        Command::Verify(args) => {
            let config = parse_config(&args.config)?;
            let root = resolve_out_dir(args.out.as_deref(), &config);
            let summary = verify(&config, &root)?;
            println!("verify ok: {summary}");
            return Ok(ExitCode::SUCCESS);
        }
        Command::Curves(args) => {
            let config = parse_config(&args.config)?;
            let root = resolve_out_dir(args.out.as_deref(), &config);
            let (record, dir) = load_run(&config, &root)?;
            let written = emit_curves(&record, &dir)?;
            for name in &written {
                println!("wrote {}", dir.join(name).display());
            }
            if written.is_empty() {
                println!("run {} has no curve artifacts", record.config_digest);
            }
            return Ok(ExitCode::SUCCESS);
        }
        Command::Codelength(a) => (ExperimentKind::Codelength, a),
        Command::Compress(a) => (ExperimentKind::Compress, a),
        Command::Decompress(a) => (ExperimentKind::Decompress, a),
        Command::Curve(a) => (ExperimentKind::Curve, a),
        Command::Continual(a) => (ExperimentKind::Continual, a),
        Command::Multitask(a) => (ExperimentKind::Multitask, a),
        Command::CrossMatrix(a) => (ExperimentKind::CrossMatrix, a),
        Command::PretrainFinetune(a) => (ExperimentKind::PretrainFinetune, a),
    };

    let config = parse_config(&args.config)?;
    if config.kind != kind {
        return Err(AppError::Config(vec![format!(
            "config kind `{}` does not match subcommand `{}`",
            config.kind.name(),
            kind.name()
        )]));
    }
    let root = resolve_out_dir(args.out.as_deref(), &config);
    let outcome = run(&config, &root, args.force, args.workers)?;
    if outcome.cached {
        println!(
            "cached: run {} already complete under {}",
            outcome.record.config_digest,
            outcome.dir.display()
        );
        return Ok(ExitCode::SUCCESS);
    }
    println!("run {} -> {}", outcome.record.config_digest, outcome.dir.display());
    for seed in &outcome.record.seeds {
        println!("  seed {}: {}", seed.seed, seed.status);
    }
    for name in &outcome.record.aggregates {
        println!("  wrote {name}");
    }
    if outcome.record.all_ok() {
        Ok(ExitCode::SUCCESS)
    } else {
        let failed = outcome.record.seeds.iter().filter(|s| s.status != "ok").count();
        eprintln!("error: {failed} of {} seeds failed", outcome.record.seeds.len());
        Ok(ExitCode::from(2))
    }
}
