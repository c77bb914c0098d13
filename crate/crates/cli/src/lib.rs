//! `divbench`: scoring, sampling campaigns, contrasts and PCA over one run
//! configuration. Each command writes into `<out>/<run_id>/`.

pub mod compare;
pub mod config;
pub mod context;
pub mod inputs;
pub mod pca;
pub mod run;
pub mod score_dat;
pub mod score_text;
pub mod summary;

use std::path::{Path, PathBuf};

use anyhow::Result;
use clap::{Parser, Subcommand};
use divbench_store::verify_run;

pub use config::RunConfig;
pub use context::Context;
pub use run::RunHooks;

#[derive(Debug, Parser)]
#[command(name = "divbench", version, about = "Creativity benchmarks for language models and humans")]
pub struct Cli {
    /// Run configuration (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory holding run folders.
    #[arg(long, global = true, default_value = "runs")]
    pub out: PathBuf,
    /// Print nothing but errors.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score word-list responses (CSV response tables or samples JSONL).
    ScoreDat {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// DSI, Lempel-Ziv complexity and structure checks for texts (JSONL or CSV).
    ScoreText {
        #[arg(required = true)]
        corpus: Vec<PathBuf>,
    },
    /// Run the configured sampling campaigns, then score what they collected.
    Run,
    /// Pairwise t-tests with FDR control across groups of score tables.
    Compare {
        #[arg(required = true)]
        scores: Vec<PathBuf>,
    },
    /// Project document embeddings of a corpus onto principal components.
    Pca {
        #[arg(required = true)]
        corpus: Vec<PathBuf>,
    },
    /// Check a run's files against its manifest.
    Verify { run_id: String },
}

/// What a command produced. `ok` is false for soft failures that still
/// wrote outputs, such as an incomplete campaign.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub run_id: String,
    pub dir: PathBuf,
    pub lines: Vec<String>,
    pub ok: bool,
}

impl Outcome {
    pub fn new(run_id: String, dir: &Path, lines: Vec<String>) -> Self {
        Self {
            run_id,
            dir: dir.to_path_buf(),
            lines,
            ok: true,
        }
    }
}

pub fn load_context(cli: &Cli) -> Result<Context> {
    let config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    Ok(Context::new(config, &cli.out))
}

pub fn execute(ctx: &Context, command: &Command) -> Result<Outcome> {
    match command {
        Command::ScoreDat { inputs } => score_dat::cmd_score_dat(ctx, inputs),
        Command::ScoreText { corpus } => score_text::cmd_score_text(ctx, corpus),
        Command::Run => run::cmd_run(ctx, &RunHooks::default()),
        Command::Compare { scores } => compare::cmd_compare(ctx, scores),
        Command::Pca { corpus } => pca::cmd_pca(ctx, corpus),
        Command::Verify { run_id } => {
            let report = verify_run(&ctx.out, run_id)?;
            let mut lines = vec![format!(
                "{}: {} ({} files checked)",
                report.run_id,
                if report.passed { "pass" } else { "FAIL" },
                report.files_checked
            )];
            for f in &report.findings {
                lines.push(format!("  {:?} {}: {}", f.kind, f.file.as_deref().unwrap_or("-"), f.message));
            }
            let mut outcome = Outcome::new(run_id.clone(), &ctx.out.join(run_id), lines);
            outcome.ok = report.passed;
            Ok(outcome)
        }
    }
}
