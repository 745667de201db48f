//! Command line surface: argument parsing into a [`CommandPlan`] and its
//! execution.
//!
//! Exit statuses: 0 on success, 1 on data errors, 2 on usage errors.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use chrono::{DateTime, NaiveDate, Utc};
use clap::{Args, Parser, Subcommand, ValueEnum};
use wocp_core::aggregation::{aggregate, collect, divergence_report, flatten, repo_multiplicity_histogram};
use wocp_core::classifier::{predict_corpus, RuleThresholds};
use wocp_core::corpus::parse_timestamp;
use wocp_core::evaluation::{compare_models, contributor_confusion, export_scatter};
use wocp_core::patterns::DEFAULT_SIMILARITY_THRESHOLD;
use wocp_core::simulation::{sweep, SimConfig};
use wocp_core::{AggregationConfig, CommentRecord, GroundTruth, Prediction, RepoId, Truth};

use crate::anonymize::Anonymizer;
use crate::formats;
use crate::fsio::{sidecar_path, write_atomic};
use crate::github::{fetch_comments, FetchPlan, SystemClock, UreqTransport};
use crate::ingest::{load_corpus, SamplingRules};
use crate::report;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DATA: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "wocp", version, about = "Per-repository bot detection with cross-repository majority voting")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Download issue and pull request comments into a JSONL corpus.
    Fetch(FetchArgs),
    /// Classify every contributor of every repository in a corpus.
    Predict(PredictArgs),
    /// Rewrite minority predictions with each contributor's majority label.
    Aggregate(AggregateArgs),
    /// Score observed and aggregated predictions against ground truth.
    Evaluate(EvaluateArgs),
    /// Sweep synthetic prediction accuracy and compare both models.
    Simulate(SimulateArgs),
    /// Repository multiplicity histogram and divergence summary.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct SamplingArgs {
    /// Ignore comments created before this date (YYYY-MM-DD or RFC 3339).
    #[arg(long, value_parser = parse_since)]
    since: Option<DateTime<Utc>>,
    /// Keep at most this many of each contributor's newest comments per repository.
    #[arg(long, default_value_t = 100)]
    max_comments: usize,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum TieBreak {
    Bot,
    Human,
}

#[derive(Args, Debug)]
struct AggregationArgs {
    #[arg(long, value_enum, default_value = "human")]
    tie_break: TieBreak,
    /// Relabel unknowns of contributors with no human and enough bot predictions.
    #[arg(long)]
    complete_unknowns: bool,
    #[arg(long, default_value_t = 3)]
    bot_threshold: usize,
}

#[derive(Args, Debug)]
struct FetchArgs {
    /// Comma-separated owner/name list, or @FILE with one repository per line.
    #[arg(long, required = true)]
    repos: String,
    #[command(flatten)]
    sampling: SamplingArgs,
    #[arg(long, default_value_t = 50)]
    page_size: u32,
    #[arg(long, default_value_t = 4)]
    workers: usize,
    /// Skip repositories with fewer issues plus pull requests.
    #[arg(long, default_value_t = 100)]
    min_activity: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    anonymize: bool,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[command(flatten)]
    sampling: SamplingArgs,
    #[arg(long, default_value_t = 10)]
    min_comments: usize,
    #[arg(long, default_value_t = DEFAULT_SIMILARITY_THRESHOLD)]
    similarity_threshold: f64,
    #[arg(long, default_value_t = 0.2)]
    max_pattern_ratio: f64,
    #[arg(long, default_value_t = 0.3)]
    min_gini: f64,
    /// Defaults to standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    anonymize: bool,
}

#[derive(Args, Debug)]
struct AggregateArgs {
    /// Prediction CSV; defaults to standard input.
    #[arg(long)]
    predictions: Option<PathBuf>,
    #[command(flatten)]
    aggregation: AggregationArgs,
    /// Defaults to standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    anonymize: bool,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long)]
    predictions: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    /// Aggregated CSV to score; computed from the predictions when absent.
    #[arg(long)]
    aggregated: Option<PathBuf>,
    #[command(flatten)]
    aggregation: AggregationArgs,
    /// Score each contributor once, by majority label.
    #[arg(long)]
    per_contributor: bool,
    /// Also write the report here, with a JSON sidecar next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write per-contributor label counts as CSV.
    #[arg(long)]
    scatter: Option<PathBuf>,
    #[arg(long)]
    anonymize: bool,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2000)]
    contributors: usize,
    /// Comma-separated per-prediction accuracies, one row each.
    #[arg(long, value_delimiter = ',', default_value = "0.6,0.7,0.8,0.9,1.0")]
    accuracy: Vec<f64>,
    #[arg(long, default_value_t = 0.5)]
    prevalence: f64,
    #[arg(long, default_value_t = 0.0)]
    unknown_rate: f64,
    /// Score contributors active in at least this many repositories.
    #[arg(long, default_value_t = 2)]
    min_repos: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Prediction or aggregated CSV.
    #[arg(long)]
    predictions: PathBuf,
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Also write the report here, with a JSON sidecar next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    scatter: Option<PathBuf>,
    #[arg(long)]
    anonymize: bool,
}

fn parse_since(raw: &str) -> Result<DateTime<Utc>, String> {
    if let Ok(d) = NaiveDate::parse_from_str(raw, "%Y-%m-%d") {
        return Ok(d.and_hms_opt(0, 0, 0).expect("midnight").and_utc());
    }
    parse_timestamp(raw).map_err(|e| e.to_string())
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Fetch {
        repositories: Vec<RepoId>,
        out: PathBuf,
        page_size: u32,
        workers: usize,
        min_activity: u64,
    },
    Predict {
        corpus: PathBuf,
        out: Option<PathBuf>,
    },
    Aggregate {
        predictions: Option<PathBuf>,
        out: Option<PathBuf>,
    },
    Evaluate {
        predictions: PathBuf,
        truth: PathBuf,
        aggregated: Option<PathBuf>,
        per_contributor: bool,
        out: Option<PathBuf>,
        scatter: Option<PathBuf>,
    },
    Simulate {
        configs: Vec<SimConfig>,
        min_repos: usize,
        out: Option<PathBuf>,
    },
    Report {
        predictions: PathBuf,
        truth: Option<PathBuf>,
        out: Option<PathBuf>,
        scatter: Option<PathBuf>,
    },
}

/// A fully resolved invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct CommandPlan {
    pub command: Command,
    pub aggregation: AggregationConfig,
    pub thresholds: RuleThresholds,
    pub similarity_threshold: f64,
    pub anonymize: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UsageError {
    /// Rendered text, usage included where relevant.
    pub message: String,
    /// 0 for `--help` and `--version`, 2 otherwise.
    pub exit_code: i32,
}

impl UsageError {
    fn invalid(message: impl std::fmt::Display) -> Self {
        Self {
            message: format!("error: {message}\n\nFor more information, try '--help'.\n"),
            exit_code: EXIT_USAGE,
        }
    }
}

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for UsageError {}

fn parse_repositories(spec: &str) -> Result<Vec<RepoId>, UsageError> {
    let text;
    let items: Vec<&str> = match spec.strip_prefix('@') {
        Some(path) => {
            text = std::fs::read_to_string(path)
                .map_err(|e| UsageError::invalid(format!("cannot read repository list {path}: {e}")))?;
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .collect()
        }
        None => spec.split(',').map(str::trim).filter(|s| !s.is_empty()).collect(),
    };
    let mut repos = Vec::new();
    for item in items {
        let repo = RepoId::new(item).map_err(UsageError::invalid)?;
        if !repos.contains(&repo) {
            repos.push(repo);
        }
    }
    if repos.is_empty() {
        return Err(UsageError::invalid("--repos names no repository"));
    }
    Ok(repos)
}

fn apply_sampling(cfg: &mut AggregationConfig, s: &SamplingArgs) {
    if let Some(since) = s.since {
        cfg.since = since;
    }
    cfg.max_comments = s.max_comments;
}

fn apply_aggregation(cfg: &mut AggregationConfig, a: &AggregationArgs) {
    cfg.tie_break = match a.tie_break {
        TieBreak::Bot => Truth::Bot,
        TieBreak::Human => Truth::Human,
    };
    cfg.complete_unknowns = a.complete_unknowns;
    cfg.bot_threshold = a.bot_threshold;
}

/// Parses `argv` (program name first) into a validated plan.
pub fn parse_args<I, T>(argv: I) -> Result<CommandPlan, UsageError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| UsageError {
        message: e.render().to_string(),
        exit_code: e.exit_code(),
    })?;
    let mut aggregation = AggregationConfig::default();
    let mut thresholds = RuleThresholds::default();
    let mut similarity_threshold = DEFAULT_SIMILARITY_THRESHOLD;
    let mut anonymize = false;

    let command = match cli.command {
        Cmd::Fetch(a) => {
            apply_sampling(&mut aggregation, &a.sampling);
            anonymize = a.anonymize;
            Command::Fetch {
                repositories: parse_repositories(&a.repos)?,
                out: a.out,
                page_size: a.page_size,
                workers: a.workers,
                min_activity: a.min_activity,
            }
        }
        Cmd::Predict(a) => {
            apply_sampling(&mut aggregation, &a.sampling);
            aggregation.min_comments = a.min_comments;
            thresholds = RuleThresholds {
                min_comments: a.min_comments,
                max_pattern_ratio: a.max_pattern_ratio,
                min_gini: a.min_gini,
            };
            similarity_threshold = a.similarity_threshold;
            anonymize = a.anonymize;
            Command::Predict {
                corpus: a.corpus,
                out: a.out,
            }
        }
        Cmd::Aggregate(a) => {
            apply_aggregation(&mut aggregation, &a.aggregation);
            anonymize = a.anonymize;
            Command::Aggregate {
                predictions: a.predictions,
                out: a.out,
            }
        }
        Cmd::Evaluate(a) => {
            apply_aggregation(&mut aggregation, &a.aggregation);
            anonymize = a.anonymize;
            Command::Evaluate {
                predictions: a.predictions,
                truth: a.truth,
                aggregated: a.aggregated,
                per_contributor: a.per_contributor,
                out: a.out,
                scatter: a.scatter,
            }
        }
        Cmd::Simulate(a) => {
            let base = SimConfig {
                n_contributors: a.contributors,
                bot_prevalence: a.prevalence,
                unknown_rate: a.unknown_rate,
                seed: a.seed,
                ..SimConfig::default()
            };
            let configs: Vec<SimConfig> = a
                .accuracy
                .iter()
                .map(|&accuracy| SimConfig {
                    accuracy,
                    ..base.clone()
                })
                .collect();
            for c in &configs {
                c.validate().map_err(UsageError::invalid)?;
            }
            if a.min_repos == 0 {
                return Err(UsageError::invalid("--min-repos must be at least 1"));
            }
            Command::Simulate {
                configs,
                min_repos: a.min_repos,
                out: a.out,
            }
        }
        Cmd::Report(a) => {
            anonymize = a.anonymize;
            Command::Report {
                predictions: a.predictions,
                truth: a.truth,
                out: a.out,
                scatter: a.scatter,
            }
        }
    };

    aggregation.validate().map_err(UsageError::invalid)?;
    thresholds.validate().map_err(UsageError::invalid)?;
    if !(0.0..=1.0).contains(&similarity_threshold) {
        return Err(UsageError::invalid(format!(
            "similarity threshold {similarity_threshold} not in [0, 1]"
        )));
    }
    if let Command::Fetch { page_size, workers, .. } = &command {
        if !(1..=100).contains(page_size) {
            return Err(UsageError::invalid(format!("page size must be between 1 and 100, got {page_size}")));
        }
        if *workers == 0 {
            return Err(UsageError::invalid("--workers must be at least 1"));
        }
    }
    Ok(CommandPlan {
        command,
        aggregation,
        thresholds,
        similarity_threshold,
        anonymize,
    })
}

fn open(path: &Path) -> anyhow::Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("cannot open {}", path.display()))?))
}

fn read_predictions_file(path: &Path) -> anyhow::Result<Vec<Prediction>> {
    formats::read_predictions(open(path)?).with_context(|| format!("{}", path.display()))
}

/// Reads either a prediction or an aggregated CSV, going by its header.
fn read_any_predictions(path: &Path) -> anyhow::Result<Vec<Prediction>> {
    let mut text = String::new();
    open(path)?
        .read_to_string(&mut text)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let header = text.lines().next().unwrap_or("");
    let result = if header.trim_end() == formats::AGGREGATED_HEADER.join(",") {
        formats::read_aggregated(text.as_bytes())
    } else {
        formats::read_predictions(text.as_bytes())
    };
    result.with_context(|| format!("{}", path.display()))
}

fn read_truth_file(path: &Path) -> anyhow::Result<GroundTruth> {
    formats::read_truth(open(path)?).with_context(|| format!("{}", path.display()))
}

/// Writes to `path` atomically, or to `out` when there is no path.
fn emit(path: Option<&Path>, bytes: &[u8], out: &mut dyn Write) -> anyhow::Result<()> {
    match path {
        Some(p) => write_atomic(p, bytes).with_context(|| format!("cannot write {}", p.display())),
        None => out.write_all(bytes).context("cannot write to standard output"),
    }
}

fn csv_bytes<F>(f: F) -> anyhow::Result<Vec<u8>>
where
    F: FnOnce(&mut Vec<u8>) -> Result<(), formats::FormatError>,
{
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn json_bytes(v: &serde_json::Value) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(v).expect("JSON values serialize");
    bytes.push(b'\n');
    bytes
}

/// Writes `text` to standard output, and to `path` with a JSON sidecar.
fn emit_report(text: &str, sidecar: &serde_json::Value, path: Option<&Path>, out: &mut dyn Write) -> anyhow::Result<()> {
    out.write_all(text.as_bytes()).context("cannot write to standard output")?;
    if let Some(p) = path {
        let side = sidecar_path(p, "json");
        write_atomic(&side, &json_bytes(sidecar)).with_context(|| format!("cannot write {}", side.display()))?;
        write_atomic(p, text.as_bytes()).with_context(|| format!("cannot write {}", p.display()))?;
    }
    Ok(())
}

fn anonymized(plan: &CommandPlan, preds: Vec<Prediction>) -> Vec<Prediction> {
    if !plan.anonymize {
        return preds;
    }
    let anon = Anonymizer::from_env();
    preds.iter().map(|p| anon.prediction(p)).collect()
}

fn run_fetch(plan: &CommandPlan, out: &mut dyn Write) -> anyhow::Result<()> {
    let Command::Fetch {
        repositories,
        out: path,
        page_size,
        workers,
        min_activity,
    } = &plan.command
    else {
        unreachable!()
    };
    let fetch = FetchPlan {
        repositories: repositories.clone(),
        since: plan.aggregation.since,
        max_comments_per_contributor: plan.aggregation.max_comments,
        page_size: *page_size,
        min_activity: *min_activity,
        workers: *workers,
        ..FetchPlan::default()
    };
    fetch.validate(Utc::now())?;
    let token = fetch.token()?;
    let outcome = fetch_comments(&fetch, &UreqTransport::new(token), &SystemClock);
    let corpus = if plan.anonymize {
        let anon = Anonymizer::from_env();
        let records: Vec<CommentRecord> = outcome
            .corpus
            .into_records()
            .into_iter()
            .map(|r| CommentRecord {
                contributor: anon.login(&r.contributor),
                ..r
            })
            .collect();
        wocp_core::corpus::Corpus::from_records(records).0
    } else {
        outcome.corpus
    };
    let mut bytes = Vec::new();
    formats::write_corpus(&mut bytes, &corpus)?;
    write_atomic(path, &bytes).with_context(|| format!("cannot write {}", path.display()))?;
    let side = sidecar_path(path, "report.json");
    write_atomic(&side, &json_bytes(&outcome.report.to_json()))
        .with_context(|| format!("cannot write {}", side.display()))?;
    out.write_all(outcome.report.summary().as_bytes())?;
    Ok(())
}

fn run_predict(plan: &CommandPlan, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<()> {
    let Command::Predict { corpus, out: path } = &plan.command else {
        unreachable!()
    };
    let rules = SamplingRules {
        since: plan.aggregation.since,
        max_comments: plan.aggregation.max_comments,
    };
    let loaded = load_corpus(corpus, &rules).with_context(|| format!("cannot read {}", corpus.display()))?;
    for e in &loaded.errors {
        writeln!(err, "{}:{}: skipped: {}", corpus.display(), e.line, e.message)?;
    }
    let preds = predict_corpus(&loaded.corpus, &plan.thresholds, plan.similarity_threshold)?;
    let preds = anonymized(plan, preds);
    let bytes = csv_bytes(|b| formats::write_predictions(b, &preds))?;
    emit(path.as_deref(), &bytes, out)
}

fn run_aggregate(plan: &CommandPlan, out: &mut dyn Write) -> anyhow::Result<()> {
    let Command::Aggregate { predictions, out: path } = &plan.command else {
        unreachable!()
    };
    let preds = match predictions {
        Some(p) => read_predictions_file(p)?,
        None => formats::read_predictions(std::io::stdin().lock()).context("standard input")?,
    };
    let revised = flatten(&aggregate(&preds, &plan.aggregation)?);
    let revised = anonymized(plan, revised);
    let bytes = csv_bytes(|b| formats::write_aggregated(b, &revised))?;
    emit(path.as_deref(), &bytes, out)
}

fn run_evaluate(plan: &CommandPlan, out: &mut dyn Write) -> anyhow::Result<()> {
    let Command::Evaluate {
        predictions,
        truth,
        aggregated,
        per_contributor,
        out: path,
        scatter,
    } = &plan.command
    else {
        unreachable!()
    };
    let before = read_predictions_file(predictions)?;
    let truth = read_truth_file(truth)?;
    let after = match aggregated {
        Some(p) => formats::read_aggregated(open(p)?).with_context(|| format!("{}", p.display()))?,
        None => flatten(&aggregate(&before, &plan.aggregation)?),
    };

    if let Some(s) = scatter {
        let mut rows = export_scatter(&collect(&before)?, &truth);
        if plan.anonymize {
            let anon = Anonymizer::from_env();
            rows = rows.iter().map(|r| anon.scatter_row(r)).collect();
        }
        let bytes = csv_bytes(|b| formats::write_scatter(b, &rows))?;
        emit(Some(s), &bytes, out)?;
    }

    if *per_contributor {
        let observed = contributor_confusion(&collect(&before)?, &truth, plan.aggregation.tie_break)?;
        let revised = contributor_confusion(&collect(&after)?, &truth, plan.aggregation.tie_break)?;
        let (om, rm) = (observed.metrics()?, revised.metrics()?);
        let rows = [
            report::ScoreRow {
                model: "observed",
                confusion: &observed,
                metrics: &om,
            },
            report::ScoreRow {
                model: "woc-p",
                confusion: &revised,
                metrics: &rm,
            },
        ];
        let mut text = report::score_table(&rows);
        text.push_str(&format!(
            "\nscored per contributor; {} contributors without a known label excluded\n",
            observed.excluded_unknowns
        ));
        return emit_report(&text, &report::scores_json(&rows), path.as_deref(), out);
    }

    let cmp = compare_models(&before, &after, &truth)?;
    emit_report(
        &report::comparison_text(&cmp),
        &report::comparison_json(&cmp),
        path.as_deref(),
        out,
    )
}

fn run_simulate(plan: &CommandPlan, out: &mut dyn Write) -> anyhow::Result<()> {
    let Command::Simulate {
        configs,
        min_repos,
        out: path,
    } = &plan.command
    else {
        unreachable!()
    };
    let rows = sweep(configs, *min_repos)?;
    let bytes = csv_bytes(|b| formats::write_sweep(b, &rows))?;
    emit(path.as_deref(), &bytes, out)
}

fn run_report(plan: &CommandPlan, out: &mut dyn Write) -> anyhow::Result<()> {
    let Command::Report {
        predictions,
        truth,
        out: path,
        scatter,
    } = &plan.command
    else {
        unreachable!()
    };
    let entries = collect(&read_any_predictions(predictions)?)?;
    let histogram = repo_multiplicity_histogram(&entries);
    let divergence = divergence_report(&entries);
    if let Some(s) = scatter {
        let truth = match truth {
            Some(t) => read_truth_file(t)?,
            None => GroundTruth::new(),
        };
        let mut rows = export_scatter(&entries, &truth);
        if plan.anonymize {
            let anon = Anonymizer::from_env();
            rows = rows.iter().map(|r| anon.scatter_row(r)).collect();
        }
        let bytes = csv_bytes(|b| formats::write_scatter(b, &rows))?;
        emit(Some(s), &bytes, out)?;
    } else if truth.is_some() {
        bail!("--truth is only used together with --scatter");
    }
    emit_report(
        &report::population_text(&histogram, &divergence),
        &report::population_json(&histogram, &divergence),
        path.as_deref(),
        out,
    )
}

/// Executes a plan. Returns the exit status.
pub fn run(plan: &CommandPlan, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match plan.command {
        Command::Fetch { .. } => run_fetch(plan, out),
        Command::Predict { .. } => run_predict(plan, out, err),
        Command::Aggregate { .. } => run_aggregate(plan, out),
        Command::Evaluate { .. } => run_evaluate(plan, out),
        Command::Simulate { .. } => run_simulate(plan, out),
        Command::Report { .. } => run_report(plan, out),
    };
    match result.and_then(|()| out.flush().context("cannot write to standard output")) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_DATA
        }
    }
}

/// Parses and runs; what `main` does.
pub fn main_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match parse_args(argv) {
        Ok(plan) => run(&plan, out, err),
        Err(e) => {
            let sink: &mut dyn Write = if e.exit_code == EXIT_OK { out } else { err };
            let _ = sink.write_all(e.message.as_bytes());
            e.exit_code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &str) -> Result<CommandPlan, UsageError> {
        parse_args(std::iter::once("wocp").chain(args.split_whitespace()))
    }

    #[test]
    fn predict_with_defaults() {
        let plan = parse("predict --corpus c.jsonl --out p.csv").unwrap();
        assert_eq!(
            plan.command,
            Command::Predict {
                corpus: "c.jsonl".into(),
                out: Some("p.csv".into()),
            }
        );
        assert_eq!(plan.aggregation, AggregationConfig::default());
        assert_eq!(plan.thresholds, RuleThresholds::default());
        assert!(!plan.anonymize);
    }

    #[test]
    fn tie_break_bot() {
        let plan = parse("aggregate --tie-break bot").unwrap();
        assert_eq!(plan.aggregation.tie_break, Truth::Bot);
        assert!(!plan.aggregation.complete_unknowns);
        assert_eq!(plan.aggregation.bot_threshold, 3);
    }

    #[test]
    fn zero_min_comments_is_a_usage_error() {
        let e = parse("predict --corpus c.jsonl --min-comments 0").unwrap_err();
        assert_eq!(e.exit_code, EXIT_USAGE);
        assert!(e.message.contains("min comments"));
    }

    #[test]
    fn missing_required_argument() {
        let e = parse("evaluate --predictions p.csv").unwrap_err();
        assert_eq!(e.exit_code, EXIT_USAGE);
        assert!(e.message.contains("--truth"));
    }

    #[test]
    fn unknown_flag_rejected() {
        assert_eq!(parse("aggregate --corpus x").unwrap_err().exit_code, EXIT_USAGE);
        assert_eq!(parse("predict --corpus c --token abc").unwrap_err().exit_code, EXIT_USAGE);
    }

    #[test]
    fn help_exits_zero() {
        assert_eq!(parse("--help").unwrap_err().exit_code, EXIT_OK);
    }

    #[test]
    fn since_accepts_date_or_timestamp() {
        let a = parse("predict --corpus c --since 2019-03-01").unwrap();
        let b = parse("predict --corpus c --since 2019-03-01T00:00:00Z").unwrap();
        assert_eq!(a.aggregation.since, b.aggregation.since);
        assert!(parse("predict --corpus c --since March").is_err());
    }

    #[test]
    fn repos_list_and_file() {
        let plan = parse("fetch --repos a/b,c/d,a/b --out x.jsonl").unwrap();
        let Command::Fetch { repositories, .. } = plan.command else {
            panic!("not fetch")
        };
        assert_eq!(repositories.len(), 2);

        let dir = tempfile::tempdir().unwrap();
        let list = dir.path().join("repos.txt");
        std::fs::write(&list, "# comment\nx/y\n\nz/w\n").unwrap();
        let plan = parse(&format!("fetch --repos @{} --out x.jsonl", list.display())).unwrap();
        let Command::Fetch { repositories, .. } = plan.command else {
            panic!("not fetch")
        };
        assert_eq!(repositories, vec![RepoId::new("x/y").unwrap(), RepoId::new("z/w").unwrap()]);
        assert!(parse("fetch --repos nope --out x.jsonl").is_err());
    }

    #[test]
    fn simulate_rejects_bad_probability() {
        assert_eq!(parse("simulate --accuracy 1.5").unwrap_err().exit_code, EXIT_USAGE);
        let plan = parse("simulate --seed 7 --accuracy 0.6,0.9").unwrap();
        let Command::Simulate { configs, .. } = plan.command else {
            panic!("not simulate")
        };
        assert_eq!(configs.iter().map(|c| c.accuracy).collect::<Vec<_>>(), [0.6, 0.9]);
        assert!(configs.iter().all(|c| c.seed == 7));
    }

    #[test]
    fn fetch_page_size_bounds() {
        assert!(parse("fetch --repos a/b --out x --page-size 0").is_err());
        assert!(parse("fetch --repos a/b --out x --page-size 101").is_err());
        assert!(parse("fetch --repos a/b --out x --page-size 100").is_ok());
    }
}
