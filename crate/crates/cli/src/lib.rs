//! Command-line workflow: pretrain → train → gen → screen → interpret.

pub mod commands;
pub mod config;
mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::RunConfig;

#[derive(Debug, Parser)]
#[command(
    name = "formscreen",
    version,
    about = "Electrolyte formulation screening"
)]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (default: ./out).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Default, Args)]
pub struct Inputs {
    /// Cell dataset CSV.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Pretraining corpus CSV.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Model artifact.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Candidate pool CSV.
    #[arg(long)]
    pub pool: Option<PathBuf>,
    /// Screening predictions CSV.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic pretraining corpus and cell dataset.
    Synth,
    /// Pretrain and freeze the graph encoder.
    Pretrain(Inputs),
    /// Train the capacity regressor on a dataset split.
    Train(Inputs),
    /// Score a trained model on a dataset.
    Eval(Inputs),
    /// Generate the candidate design pool.
    Gen,
    /// Predict, rank and shortlist the pool.
    Screen(Inputs),
    /// Spearman and quartile analysis of predictions or measurements.
    Interpret(Inputs),
    /// Compare model families on one held-out split.
    Report(Inputs),
}

/// Builds the effective configuration from file and flags.
pub fn resolve(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.out = Some(out.clone());
    }
    let inputs = match &cli.command {
        Command::Pretrain(i)
        | Command::Train(i)
        | Command::Eval(i)
        | Command::Screen(i)
        | Command::Interpret(i)
        | Command::Report(i) => Some(i),
        Command::Synth | Command::Gen => None,
    };
    if let Some(i) = inputs {
        let p = &mut cfg.paths;
        for (slot, flag) in [
            (&mut p.dataset, &i.dataset),
            (&mut p.corpus, &i.corpus),
            (&mut p.model, &i.model),
            (&mut p.pool, &i.pool),
            (&mut p.predictions, &i.predictions),
        ] {
            if flag.is_some() {
                slot.clone_from(flag);
            }
        }
    }
    let seed = cli.seed.unwrap_or(cfg.seed);
    cfg.apply_seed(seed);
    Ok(cfg)
}

pub fn run(cli: &Cli) -> anyhow::Result<()> {
    let cfg = resolve(cli)?;
    match &cli.command {
        Command::Synth => commands::synth(&cfg),
        Command::Pretrain(_) => commands::pretrain_cmd(&cfg),
        Command::Train(_) => commands::train_cmd(&cfg),
        Command::Eval(_) => commands::eval_cmd(&cfg),
        Command::Gen => commands::gen_cmd(&cfg),
        Command::Screen(_) => commands::screen_cmd(&cfg),
        Command::Interpret(_) => commands::interpret_cmd(&cfg),
        Command::Report(_) => commands::report_cmd(&cfg),
    }
}

pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// 3 for numeric failures anywhere in the chain, otherwise 2.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    let numeric = err
        .chain()
        .filter_map(|e| e.downcast_ref::<formscreen::Error>())
        .any(formscreen::Error::is_numeric);
    if numeric {
        EXIT_NUMERIC
    } else {
        EXIT_INPUT
    }
}
