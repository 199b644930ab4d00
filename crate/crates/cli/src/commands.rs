use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use homogen_core::corpus::{
    augmented_id, load_records, synthesize_corpus, validate_design, write_records, ConditionLabel, CorpusFormat,
    CorpusSet, EssayRecord, SyntheticSpec,
};
use homogen_core::evalgen::{
    ai_essay_id, augment_batch, generate_ai_only, run_extraction, validate_stability, Checkpoint,
    EvaluatorRubric, FeatureTable, GenerationOutcome, TopicRequest,
};
use homogen_core::pipeline::{full_report, render_summary, write_bundle, AnalysisReport};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::endpoint::{credentials, Endpoint};
use crate::error::{io_error, CliError, EXIT_DESIGN, EXIT_ENDPOINT, EXIT_INPUT, EXIT_MISSING_CONDITION};
use crate::Ui;

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("report values serialize");
    text.push('\n');
    fs::write(path, text).map_err(|e| io_error(path, e))
}

fn write_effective_config(cfg: &RunConfig, command: &str) -> Result<(), CliError> {
    let path = cfg.paths.out.join(format!("{command}.config.toml"));
    fs::write(&path, cfg.to_toml()).map_err(|e| io_error(&path, e))
}

fn load_corpora(paths: &[PathBuf], format: Option<CorpusFormat>) -> Result<CorpusSet, CliError> {
    if paths.is_empty() {
        return Err(CliError::input("no corpus file given"));
    }
    let mut records = Vec::new();
    for p in paths {
        let fmt = format.unwrap_or_else(|| CorpusFormat::from_path(p));
        records.extend(load_records(p, fmt).map_err(|e| CliError::from(e).context(p.display()))?);
    }
    if records.is_empty() {
        return Err(CliError::input("corpus is empty"));
    }
    Ok(CorpusSet::new(records)?)
}

fn corpus_paths<'a>(args: &'a [PathBuf], cfg: &'a RunConfig) -> &'a [PathBuf] {
    if args.is_empty() {
        &cfg.paths.corpus
    } else {
        args
    }
}

/// Checkpoint for a command. A leftover file is only reused with `--resume`.
fn open_checkpoint(cfg: &RunConfig, command: &str, resume: bool) -> Result<Checkpoint, CliError> {
    let path = cfg.checkpoint_path(command);
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        ensure_dir(dir)?;
    }
    match (path.exists(), resume) {
        (true, false) => Err(CliError::input(format!(
            "checkpoint {} already exists; pass --resume to continue it or remove it",
            path.display()
        ))),
        (false, true) => {
            log::warn!("no checkpoint at {}; starting from scratch", path.display());
            Ok(Checkpoint::new(path))
        }
        _ => Ok(Checkpoint::new(path)),
    }
}

fn remaining_error(what: &str, remaining: &[String], checkpoint: &Checkpoint) -> CliError {
    let preview: Vec<&str> = remaining.iter().take(10).map(String::as_str).collect();
    let more = if remaining.len() > preview.len() {
        format!(" and {} more", remaining.len() - preview.len())
    } else {
        String::new()
    };
    CliError::new(
        EXIT_ENDPOINT,
        format!(
            "{what} incomplete: {} call(s) outstanding ({}{more}); progress is in {}, rerun with --resume",
            remaining.len(),
            preview.join(", "),
            checkpoint.path().display()
        ),
    )
}

pub fn ingest(
    cfg: &RunConfig,
    ui: &Ui,
    paths: &[PathBuf],
    format: Option<CorpusFormat>,
    strict: bool,
    write: bool,
) -> Result<(), CliError> {
    let corpus = load_corpora(corpus_paths(paths, cfg), format)?;
    let design = validate_design(&corpus);
    ui.say(format!("{} essays", corpus.len()));
    ui.say(format!("{:<16} {:>6} {:>8}", "condition", "topic", "essays"));
    for cell in &design.design_counts {
        ui.say(format!("{:<16} {:>6} {:>8}", cell.condition.to_string(), cell.topic_id, cell.count));
    }
    for c in &design.conditions {
        let cov = c.coverage.map_or("-".to_string(), |x| format!("{:.1}%", 100.0 * x));
        ui.say(format!("{:<16} matched {}/{} ({cov})", c.condition.to_string(), c.matched, c.human_total));
    }
    if write {
        ensure_dir(&cfg.paths.out)?;
        write_json(&cfg.paths.out.join("design.json"), &design)?;
    }
    if !design.complete {
        for r in &design.reasons {
            log::warn!("{r}");
        }
        if strict {
            return Err(CliError::new(
                EXIT_DESIGN,
                format!("incomplete crossing: {}", design.reasons.join("; ")),
            ));
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct SynthSummary<'a> {
    spec: &'a SyntheticSpec,
    counts: Vec<(ConditionLabel, usize)>,
    clipping: &'a [homogen_core::corpus::ClipCount],
    low_n: bool,
}

fn read_spec(path: &Path) -> Result<SyntheticSpec, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let parsed = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    } else {
        toml::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

pub fn synth(
    cfg: &RunConfig,
    ui: &Ui,
    spec_path: Option<&Path>,
    seed: Option<u64>,
    n: Option<usize>,
    no_clip: bool,
) -> Result<(), CliError> {
    let mut spec = match spec_path {
        Some(p) => read_spec(p)?,
        None => SyntheticSpec::reference(cfg.analysis.seed),
    };
    if let Some(s) = seed {
        spec.seed = s;
    }
    if let Some(n) = n {
        spec.n = n;
    }
    spec.clip &= !no_clip;
    let s = synthesize_corpus(&spec)?;
    let out = &cfg.paths.out;
    ensure_dir(out)?;
    write_records(s.corpus.records(), &out.join("corpus.jsonl"), CorpusFormat::Jsonl)?;
    s.features.write_jsonl(&out.join("features.jsonl"))?;
    let counts: Vec<(ConditionLabel, usize)> = spec.conditions.keys().map(|c| (*c, s.features.count(*c))).collect();
    write_json(
        &out.join("synth.json"),
        &SynthSummary {
            spec: &spec,
            counts: counts.clone(),
            clipping: &s.clipping,
            low_n: s.low_n,
        },
    )?;
    write_effective_config(cfg, "synth")?;
    ui.say(format!("seed {}: {} essays written to {}", spec.seed, s.features.len(), out.display()));
    for (c, k) in counts {
        ui.say(format!("  {:<16} {k}", c.to_string()));
    }
    let clipped: usize = s.clipping.iter().map(|c| c.count).sum();
    if clipped > 0 {
        ui.say(format!("  {clipped} scores clipped to rubric bounds (see synth.json)"));
    }
    if s.low_n {
        log::warn!("fewer than {} essays per condition; tests are flagged low-n", homogen_core::corpus::LOW_N);
    }
    Ok(())
}

fn finish_generation(
    cfg: &RunConfig,
    ui: &Ui,
    endpoint: &Endpoint,
    outcome: GenerationOutcome,
    expected: Vec<String>,
    checkpoint: &Checkpoint,
    command: &str,
    file: &str,
) -> Result<(), CliError> {
    endpoint.finish(&cfg.endpoint)?;
    let done: BTreeSet<&str> = outcome.records.iter().map(|r| r.essay_id.as_str()).collect();
    let remaining: Vec<String> = expected.into_iter().filter(|id| !done.contains(id.as_str())).collect();
    if !remaining.is_empty() {
        return Err(remaining_error(command, &remaining, checkpoint));
    }
    let path = cfg.paths.out.join(file);
    write_records(&outcome.records, &path, CorpusFormat::Jsonl)?;
    write_effective_config(cfg, command)?;
    ui.say(format!(
        "{} records written to {} ({} from checkpoint)",
        outcome.records.len(),
        path.display(),
        outcome.resumed
    ));
    Ok(())
}

pub fn augment(cfg: &RunConfig, ui: &Ui, paths: &[PathBuf], resume: bool) -> Result<(), CliError> {
    cfg.validate()?;
    let corpus = load_corpora(corpus_paths(paths, cfg), None)?;
    let humans: Vec<EssayRecord> = corpus.by_condition(ConditionLabel::HumanOnly).cloned().collect();
    if humans.is_empty() {
        return Err(CliError::input("corpus has no human-only essays to augment"));
    }
    let strategies = &cfg.generate.strategies;
    if strategies.is_empty() {
        return Err(CliError::input("no prompt strategies selected"));
    }
    ensure_dir(&cfg.paths.out)?;
    let creds = credentials(&cfg.endpoint)?;
    let endpoint = Endpoint::build(&cfg.endpoint, &cfg.endpoint.generation_model)?;
    let checkpoint = open_checkpoint(cfg, "augment", resume)?;
    let outcome = augment_batch(&humans, strategies, endpoint.evaluator(), &cfg.policy, &creds, Some(&checkpoint));
    let outcome = match outcome {
        Ok(o) => o,
        Err(e) => {
            endpoint.finish(&cfg.endpoint)?;
            return Err(e.into());
        }
    };
    let expected = strategies
        .iter()
        .flat_map(|s| humans.iter().map(move |h| augmented_id(&h.essay_id, *s)))
        .collect();
    finish_generation(cfg, ui, &endpoint, outcome, expected, &checkpoint, "augment", "augmented.jsonl")
}

#[derive(Deserialize)]
struct TopicsFile {
    topics: Vec<TopicRequest>,
}

pub fn generate_ai(cfg: &mut RunConfig, ui: &Ui, topics: Option<&Path>, resume: bool) -> Result<(), CliError> {
    if let Some(p) = topics {
        let text = fs::read_to_string(p).map_err(|e| io_error(p, e))?;
        let parsed: Result<TopicsFile, String> = if p.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        } else {
            toml::from_str(&text).map_err(|e| e.to_string())
        };
        cfg.generate.topics = parsed.map_err(|e| CliError::input(format!("{}: {e}", p.display())))?.topics;
    }
    cfg.validate()?;
    let requests = &cfg.generate.topics;
    if requests.is_empty() {
        return Err(CliError::input("no topics configured (generate.topics or --topics)"));
    }
    ensure_dir(&cfg.paths.out)?;
    let creds = credentials(&cfg.endpoint)?;
    let endpoint = Endpoint::build(&cfg.endpoint, &cfg.endpoint.generation_model)?;
    let checkpoint = open_checkpoint(cfg, "generate-ai", resume)?;
    let outcome = match generate_ai_only(requests, endpoint.evaluator(), &cfg.policy, &creds, Some(&checkpoint)) {
        Ok(o) => o,
        Err(e) => {
            endpoint.finish(&cfg.endpoint)?;
            return Err(e.into());
        }
    };
    let expected = requests
        .iter()
        .flat_map(|r| (1..=r.n).map(move |i| ai_essay_id(r.topic_id, i)))
        .collect();
    finish_generation(cfg, ui, &endpoint, outcome, expected, &checkpoint, "generate-ai", "ai_only.jsonl")
}

pub fn evaluate(cfg: &RunConfig, ui: &Ui, paths: &[PathBuf], resume: bool) -> Result<(), CliError> {
    cfg.validate()?;
    let corpus = load_corpora(corpus_paths(paths, cfg), None)?;
    ensure_dir(&cfg.paths.out)?;
    let creds = credentials(&cfg.endpoint)?;
    let endpoint = Endpoint::build(&cfg.endpoint, &cfg.endpoint.evaluation_model)?;
    let checkpoint = open_checkpoint(cfg, "evaluate", resume)?;
    let rubric = EvaluatorRubric::default();
    let runs = cfg.evaluate.runs;
    let outcome = run_extraction(&corpus, runs, &rubric, endpoint.evaluator(), &cfg.policy, &creds, Some(&checkpoint));
    endpoint.finish(&cfg.endpoint)?;
    let outcome = outcome?;

    let done: BTreeSet<(&str, u32)> = outcome.runs.iter().map(|r| (r.essay_id.as_str(), r.run_index)).collect();
    let remaining: Vec<String> = corpus
        .records()
        .iter()
        .flat_map(|e| (0..runs).map(move |r| (e.essay_id.as_str(), r)))
        .filter(|k| !done.contains(k))
        .map(|(id, r)| format!("{id}#{r}"))
        .collect();
    if !remaining.is_empty() {
        return Err(remaining_error("evaluation", &remaining, &checkpoint));
    }

    let out = &cfg.paths.out;
    let features = out.join("features.jsonl");
    outcome.table.write_jsonl(&features)?;
    let runs_path = out.join("score_runs.jsonl");
    let mut lines = String::new();
    for r in &outcome.runs {
        lines.push_str(&serde_json::to_string(r).expect("score runs serialize"));
        lines.push('\n');
    }
    fs::write(&runs_path, lines).map_err(|e| io_error(&runs_path, e))?;
    let stability = validate_stability(&outcome.table, cfg.analysis.cv_threshold);
    write_json(&out.join("stability.json"), &stability)?;
    write_effective_config(cfg, "evaluate")?;

    ui.say(format!(
        "{} essays x {runs} runs scored ({} from checkpoint); features in {}",
        outcome.table.len(),
        outcome.resumed,
        features.display()
    ));
    for d in &stability.dimensions {
        ui.say(format!(
            "  {:<32} mean CV {:.4}  max CV {:.4}  {}",
            d.dimension.title(),
            d.mean_cv,
            d.max_cv,
            if d.pass { "ok" } else { "UNSTABLE" }
        ));
    }
    if !stability.unstable.is_empty() {
        log::warn!(
            "{} essay-dimension pairs exceed CV {}; kept in the analysis",
            stability.unstable.len(),
            stability.threshold
        );
    }
    Ok(())
}

pub fn analyze(cfg: &RunConfig, ui: &Ui) -> Result<(), CliError> {
    let features = cfg
        .paths
        .features
        .as_deref()
        .ok_or_else(|| CliError::input("no feature file given (argument or paths.features)"))?;
    let table = FeatureTable::read_jsonl(features)?;
    let corpus = if cfg.paths.corpus.is_empty() {
        None
    } else {
        Some(load_corpora(&cfg.paths.corpus, None)?)
    };
    let report = full_report(corpus.as_ref(), &table, &cfg.analysis)?;
    ensure_dir(&cfg.paths.out)?;
    let files = write_bundle(&report, &cfg.paths.out)?;
    ui.say(render_summary(&report));
    ui.say(format!("{} files written to {}", files.len(), cfg.paths.out.display()));
    stage_failures(&report)
}

fn stage_failures(report: &AnalysisReport) -> Result<(), CliError> {
    let failures = report.failures();
    for (stage, f) in &failures {
        eprintln!("{stage} failed ({}): {}", f.kind, f.message);
    }
    // a missing condition outranks other failures for the exit status
    let missing = failures.iter().find(|(_, f)| f.kind == "missing_condition");
    let (code, (_, first)) = match (missing, failures.first()) {
        (Some(m), _) => (EXIT_MISSING_CONDITION, m),
        (None, Some(f)) => (EXIT_INPUT, f),
        (None, None) => return Ok(()),
    };
    Err(CliError::new(
        code,
        format!("{} stage(s) failed; first: {}", failures.len(), first.message),
    ))
}

pub fn report(ui: &Ui, summary: &Path, out: Option<&PathBuf>) -> Result<(), CliError> {
    let text = fs::read_to_string(summary).map_err(|e| io_error(summary, e))?;
    let report: AnalysisReport =
        serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", summary.display())))?;
    if let Some(dir) = out {
        ensure_dir(dir)?;
        let files = write_bundle(&report, dir)?;
        ui.say(format!("{} files written to {}", files.len(), dir.display()));
    }
    ui.say(render_summary(&report));
    stage_failures(&report)
}
