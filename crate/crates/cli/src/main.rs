mod commands;
mod config;
mod endpoint;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use homogen_core::corpus::{CorpusFormat, PromptStrategy};
use homogen_core::metrics::StandardizeMode;

use crate::config::RunConfig;
use crate::error::CliError;

/// Structural homogenization analysis for essay corpora.
///
/// Exit codes: 0 success, 2 input error, 3 design violation, 4 missing
/// condition, 5 endpoint failure.
#[derive(Debug, Parser)]
#[command(name = "homogen", version)]
struct Cli {
    /// TOML run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed for every randomized step.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Only print errors.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load and validate corpus files, print the design table.
    Ingest {
        corpus: Vec<PathBuf>,
        #[arg(long)]
        format: Option<CorpusFormat>,
        /// Exit 3 when the H x prompt crossing is incomplete.
        #[arg(long)]
        strict: bool,
    },
    /// Write a synthetic corpus and feature table.
    Synth {
        /// Generator spec (TOML or JSON). Defaults to the reference moments.
        spec: Option<PathBuf>,
        /// Essays per condition.
        #[arg(long)]
        n: Option<usize>,
        /// Keep raw normal draws instead of clipping to rubric bounds.
        #[arg(long)]
        no_clip: bool,
    },
    /// Revise human essays under prompt strategies.
    Augment {
        corpus: Vec<PathBuf>,
        #[arg(long = "strategy")]
        strategies: Vec<PromptStrategy>,
        #[arg(long)]
        resume: bool,
    },
    /// Generate AI-only essays from topic instructions.
    GenerateAi {
        /// TOML or JSON file with a `topics` list; defaults to the config's.
        #[arg(long)]
        topics: Option<PathBuf>,
        #[arg(long)]
        resume: bool,
    },
    /// Score essays with the evaluator and aggregate runs into features.
    Evaluate {
        corpus: Vec<PathBuf>,
        #[arg(long)]
        runs: Option<u32>,
        #[arg(long)]
        cv_threshold: Option<f64>,
        #[arg(long)]
        max_concurrent: Option<usize>,
        #[arg(long)]
        resume: bool,
    },
    /// Run the analysis stages and write the report bundle.
    Analyze {
        /// Feature table (defaults to paths.features).
        features: Option<PathBuf>,
        /// Corpus files, for text characteristics.
        #[arg(long)]
        corpus: Vec<PathBuf>,
        /// Run only these stages (repeatable).
        #[arg(long = "stage")]
        stages: Vec<u8>,
        /// Reference set for profile z-scores.
        #[arg(long)]
        standardize: Option<StandardizeMode>,
        /// Rerun the stages per topic and label robustness.
        #[arg(long)]
        topic_split: bool,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        n_resamples: Option<usize>,
        #[arg(long)]
        n_permutations: Option<usize>,
        /// Per-essay stability threshold on run CV.
        #[arg(long)]
        cv_threshold: Option<f64>,
    },
    /// Re-render a report from its summary.json.
    Report { summary: PathBuf },
}

pub struct Ui {
    quiet: bool,
}

impl Ui {
    pub fn say(&self, line: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", line.as_ref());
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    let explicit_out = cli.out.is_some();
    if let Some(out) = cli.out {
        cfg.paths.out = out;
    }
    if let Some(seed) = cli.seed {
        cfg.analysis.seed = seed;
    }
    let ui = Ui { quiet: cli.quiet };
    match cli.command {
        Command::Ingest { corpus, format, strict } => {
            commands::ingest(&cfg, &ui, &corpus, format, strict, explicit_out)
        }
        Command::Synth { spec, n, no_clip } => commands::synth(&cfg, &ui, spec.as_deref(), cli.seed, n, no_clip),
        Command::Augment { corpus, strategies, resume } => {
            if !strategies.is_empty() {
                cfg.generate.strategies = strategies;
            }
            commands::augment(&cfg, &ui, &corpus, resume)
        }
        Command::GenerateAi { topics, resume } => commands::generate_ai(&mut cfg, &ui, topics.as_deref(), resume),
        Command::Evaluate { corpus, runs, cv_threshold, max_concurrent, resume } => {
            if let Some(r) = runs {
                cfg.evaluate.runs = r;
            }
            if let Some(t) = cv_threshold {
                cfg.analysis.cv_threshold = t;
            }
            if let Some(m) = max_concurrent {
                cfg.policy.max_concurrent = m;
            }
            commands::evaluate(&cfg, &ui, &corpus, resume)
        }
        Command::Analyze {
            features,
            corpus,
            stages,
            standardize,
            topic_split,
            alpha,
            n_resamples,
            n_permutations,
            cv_threshold,
        } => {
            let a = &mut cfg.analysis;
            if !stages.is_empty() {
                a.stages = stages;
            }
            if let Some(s) = standardize {
                a.standardize = s;
            }
            a.topic_split |= topic_split;
            if let Some(x) = alpha {
                a.alpha = x;
            }
            if let Some(n) = n_resamples {
                a.n_resamples = n;
            }
            if let Some(n) = n_permutations {
                a.n_permutations = n;
            }
            if let Some(t) = cv_threshold {
                a.cv_threshold = t;
            }
            if let Some(f) = features {
                cfg.paths.features = Some(f);
            }
            if !corpus.is_empty() {
                cfg.paths.corpus = corpus;
            }
            commands::analyze(&cfg, &ui)
        }
        Command::Report { summary } => commands::report(&ui, &summary, explicit_out.then_some(&cfg.paths.out)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "error" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
