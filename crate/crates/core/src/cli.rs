//! Command-line entry points.
//!
//! Exit codes: 0 success, 1 data discrepancy, 2 usage or configuration
//! error, 3 runtime failure. Every output-producing command writes the
//! resolved configuration next to its outputs so a run can be reproduced
//! from the output directory alone.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufRead;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{
    dataset_path, discover_csvs, load_category_with_aliases, official_categories,
    validate_against_reference, CategoryDataset, CategoryId, ColumnAliases, FormattingVariant,
    Language,
};
use crate::embedder::create_backend;
use crate::head::Solver;
use crate::metrics::report::{render_csv, render_svg, render_table};
use crate::metrics::{
    baseline_table, build_report, category_metrics, confusion, CategoryMetrics, ConfusionCounts,
    EvalReport,
};
use crate::orchestrator::{
    evaluate_artifact, few_shot_benchmark, train_category_with, tune_hyperparams,
    with_parallelism, ClassifierArtifact, Hyperparams, PipelineError, SearchSpace, TrainOptions,
    TuneObjectiveSplit, TuneOptions, DEFAULT_FEW_SHOT_EPOCHS, DEFAULT_FEW_SHOT_PER_CLASS,
};

#[derive(Parser)]
#[command(
    name = "ccsc",
    version,
    about = "Train, tune, evaluate, and run binary code-comment-sentence classifiers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load every category CSV under the data root and validate the counts
    Ingest(IngestArgs),
    /// Train per-category classifiers and persist them as artifacts
    Train(TrainArgs),
    /// Evaluate artifacts (or stored predictions) and emit reports
    Evaluate(EvaluateArgs),
    /// Classify sentences with a stored artifact
    Classify(ClassifyArgs),
    /// Random-search hyperparameters on one category
    Tune(TuneArgs),
    /// Few-shot model-selection benchmark on one category
    Benchmark(BenchmarkArgs),
    /// Re-render report outputs from a previously emitted metrics CSV
    Report(ReportArgs),
}

enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> CliError {
        CliError::Runtime(e)
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Parses arguments and runs; returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        // clap exits 0 for --help/--version and 2 for usage errors
        Err(e) => e.exit(),
    };
    let result = match cli.command {
        Command::Ingest(args) => cmd_ingest(args),
        Command::Train(args) => cmd_train(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Classify(args) => cmd_classify(args),
        Command::Tune(args) => cmd_tune(args),
        Command::Benchmark(args) => cmd_benchmark(args),
        Command::Report(args) => cmd_report(args),
    };
    match result {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            3
        }
    }
}

fn parse_category(s: &str) -> Result<CategoryId, CliError> {
    let (lang, name) = s
        .split_once('/')
        .ok_or_else(|| usage(format!("category must be <language>/<name>, got '{s}'")))?;
    let language = Language::parse(lang)
        .ok_or_else(|| usage(format!("unknown language '{lang}' (java, pharo, python)")))?;
    CategoryId::official(language, name)
        .map_err(|_| usage(format!("'{name}' is not an official {language} category")))
}

fn parse_variant(s: &str) -> Result<FormattingVariant, CliError> {
    match s.to_ascii_lowercase().replace('_', "-").as_str() {
        "with-classname" => Ok(FormattingVariant::WithClassname),
        "sentence-only" => Ok(FormattingVariant::SentenceOnly),
        other => Err(usage(format!(
            "variant must be with-classname or sentence-only, got '{other}'"
        ))),
    }
}

fn load_aliases(path: &Option<PathBuf>) -> Result<ColumnAliases, CliError> {
    match path {
        None => Ok(ColumnAliases::default()),
        Some(p) => {
            let text = fs::read_to_string(p)
                .with_context(|| format!("reading alias map {}", p.display()))?;
            ColumnAliases::from_json(&text)
                .map_err(|e| usage(format!("bad alias map {}: {e}", p.display())))
        }
    }
}

fn write_echo<T: Serialize>(out_dir: &Path, command: &str, resolved: &T) -> anyhow::Result<()> {
    #[derive(Serialize)]
    struct Echo<'a, T: Serialize> {
        command: &'a str,
        resolved: &'a T,
    }
    fs::create_dir_all(out_dir)?;
    let json = serde_json::to_string_pretty(&Echo { command, resolved })?;
    fs::write(out_dir.join("run_config.json"), json)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// ingest
// ---------------------------------------------------------------------------

#[derive(Args)]
struct IngestArgs {
    /// Directory holding <language>/<category>.csv files
    #[arg(long)]
    data_root: PathBuf,
    /// JSON file mapping canonical column names to actual header names
    #[arg(long)]
    aliases: Option<PathBuf>,
}

fn cmd_ingest(args: IngestArgs) -> Result<i32, CliError> {
    let aliases = load_aliases(&args.aliases)?;
    let found = discover_csvs(&args.data_root)
        .with_context(|| format!("scanning {}", args.data_root.display()))?;
    if found.is_empty() {
        eprintln!("no categories found under {}", args.data_root.display());
        return Ok(2);
    }

    let mut datasets = Vec::new();
    for (category, path) in &found {
        let (dataset, warnings) = load_category_with_aliases(path, category, &aliases)
            .with_context(|| format!("loading {}", path.display()))?;
        let c = dataset.counts;
        println!(
            "{:<22} train {}+/{}-  test {}+/{}-  total {}",
            category.to_string(),
            c.train_pos,
            c.train_neg,
            c.test_pos,
            c.test_neg,
            c.total()
        );
        for w in warnings {
            println!("  warning: {w}");
        }
        datasets.push(dataset);
    }

    let mut problems: Vec<String> = validate_against_reference(&datasets)
        .into_iter()
        .map(|d| d.to_string())
        .collect();
    for official in official_categories() {
        if !datasets.iter().any(|d| d.category == official) {
            problems.push(format!("{official}: category file missing"));
        }
    }

    if problems.is_empty() {
        println!("all {} categories match the reference counts", datasets.len());
        Ok(0)
    } else {
        for p in &problems {
            println!("discrepancy: {p}");
        }
        println!("{} discrepancies", problems.len());
        Ok(1)
    }
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

/// Fully resolved training configuration, echoed next to the artifacts.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub data_root: PathBuf,
    pub output_root: PathBuf,
    pub backend_id: String,
    pub variant: FormattingVariant,
    pub hyperparams: Hyperparams,
    pub train_options: TrainOptions,
    pub seed: u64,
    pub categories: Vec<String>,
    pub parallelism: usize,
}

/// Optional JSON config file; command-line flags win over file values.
#[derive(Debug, Default, Deserialize)]
struct FileConfig {
    data_root: Option<PathBuf>,
    output_root: Option<PathBuf>,
    backend: Option<String>,
    variant: Option<String>,
    learning_rate: Option<f64>,
    epochs: Option<usize>,
    head_iterations: Option<usize>,
    solver: Option<String>,
    pair_iterations: Option<u32>,
    batch_size: Option<usize>,
    l2_strength: Option<f64>,
    seed: Option<u64>,
    categories: Option<Vec<String>>,
    jobs: Option<usize>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data_root: Option<PathBuf>,
    /// Directory artifacts are written into
    #[arg(long)]
    out: Option<PathBuf>,
    /// Backend id, e.g. toy-hash-encoder:64:0
    #[arg(long)]
    backend: Option<String>,
    /// with-classname or sentence-only
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    head_iterations: Option<usize>,
    /// newton-cg, lbfgs, or liblin
    #[arg(long)]
    solver: Option<String>,
    #[arg(long)]
    pair_iterations: Option<u32>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    l2_strength: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Restrict to <language>/<name>; repeatable
    #[arg(long = "category")]
    categories: Vec<String>,
    /// Max categories trained in parallel (0 = automatic)
    #[arg(long)]
    jobs: Option<usize>,
    /// JSON config file; flags take precedence over its values
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    aliases: Option<PathBuf>,
}

fn load_file_config(path: &Option<PathBuf>) -> Result<FileConfig, CliError> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p)
                .with_context(|| format!("reading config {}", p.display()))?;
            serde_json::from_str(&text)
                .map_err(|e| usage(format!("bad config {}: {e}", p.display())))
        }
    }
}

fn resolve_run_config(args: &TrainArgs) -> Result<RunConfig, CliError> {
    let file = load_file_config(&args.config)?;
    let defaults_hp = Hyperparams::tuned();
    let defaults_opt = TrainOptions::default();

    let variant_str = args
        .variant
        .clone()
        .or(file.variant)
        .unwrap_or_else(|| "with-classname".to_string());
    let solver_str = args.solver.clone().or(file.solver);
    let solver = match solver_str {
        Some(s) => s.parse::<Solver>().map_err(usage)?,
        None => defaults_hp.solver,
    };

    let data_root = args
        .data_root
        .clone()
        .or(file.data_root)
        .ok_or_else(|| usage("--data-root is required (flag or config file)"))?;
    let output_root = args
        .out
        .clone()
        .or(file.output_root)
        .ok_or_else(|| usage("--out is required (flag or config file)"))?;

    Ok(RunConfig {
        data_root,
        output_root,
        backend_id: args
            .backend
            .clone()
            .or(file.backend)
            .unwrap_or_else(|| "toy-hash-encoder:64:0".to_string()),
        variant: parse_variant(&variant_str)?,
        hyperparams: Hyperparams {
            learning_rate: args
                .learning_rate
                .or(file.learning_rate)
                .unwrap_or(defaults_hp.learning_rate),
            epochs: args.epochs.or(file.epochs).unwrap_or(defaults_hp.epochs),
            head_max_iterations: args
                .head_iterations
                .or(file.head_iterations)
                .unwrap_or(defaults_hp.head_max_iterations),
            solver,
        },
        train_options: TrainOptions {
            pair_iterations: args
                .pair_iterations
                .or(file.pair_iterations)
                .unwrap_or(defaults_opt.pair_iterations),
            batch_size: args
                .batch_size
                .or(file.batch_size)
                .unwrap_or(defaults_opt.batch_size),
            l2_strength: args
                .l2_strength
                .or(file.l2_strength)
                .unwrap_or(defaults_opt.l2_strength),
            ..defaults_opt
        },
        seed: args.seed.or(file.seed).unwrap_or(0),
        categories: if args.categories.is_empty() {
            file.categories.unwrap_or_default()
        } else {
            args.categories.clone()
        },
        parallelism: args.jobs.or(file.jobs).unwrap_or(0),
    })
}

/// Datasets to operate on: the requested categories, or every official
/// category with a CSV present under the data root.
fn select_datasets(
    data_root: &Path,
    requested: &[String],
    aliases: &ColumnAliases,
) -> Result<Vec<CategoryDataset>, CliError> {
    let targets: Vec<CategoryId> = if requested.is_empty() {
        official_categories()
            .into_iter()
            .filter(|c| dataset_path(data_root, c).is_file())
            .collect()
    } else {
        requested
            .iter()
            .map(|s| parse_category(s))
            .collect::<Result<Vec<_>, _>>()?
    };
    if targets.is_empty() {
        return Err(usage(format!(
            "no category CSVs found under {}",
            data_root.display()
        )));
    }
    let mut datasets = Vec::new();
    for category in targets {
        let path = dataset_path(data_root, &category);
        let (dataset, _) = load_category_with_aliases(&path, &category, aliases)
            .with_context(|| format!("loading {}", path.display()))?;
        datasets.push(dataset);
    }
    Ok(datasets)
}

fn cmd_train(args: TrainArgs) -> Result<i32, CliError> {
    let config = resolve_run_config(&args)?;
    let aliases = load_aliases(&args.aliases)?;
    let datasets = select_datasets(&config.data_root, &config.categories, &aliases)?;
    let backend = create_backend(&config.backend_id).map_err(|e| anyhow!(e))?;

    write_echo(&config.output_root, "train", &config).map_err(CliError::Runtime)?;

    let results: Vec<(CategoryId, Result<ClassifierArtifact, PipelineError>)> =
        with_parallelism(config.parallelism, || {
            datasets
                .par_iter()
                .map(|dataset| {
                    let outcome = train_category_with(
                        dataset,
                        backend.as_ref(),
                        &config.hyperparams,
                        config.variant,
                        config.seed,
                        &config.train_options,
                    );
                    (dataset.category.clone(), outcome)
                })
                .collect()
        });

    let mut failures = 0;
    for (category, outcome) in results {
        match outcome {
            Ok(artifact) => {
                let dir = config.output_root.join(artifact.dir_name());
                artifact.save(&dir).map_err(|e| anyhow!(e))?;
                println!(
                    "trained {:<22} pairs {:<6} head converged {:<5} {} ms -> {}",
                    category.to_string(),
                    artifact.meta.pair_count,
                    artifact.head.converged,
                    artifact.meta.train_wall_ms,
                    dir.display()
                );
            }
            Err(e) => {
                eprintln!("failed {category}: {e}");
                failures += 1;
            }
        }
    }
    if failures > 0 {
        Err(CliError::Runtime(anyhow!("{failures} categories failed")))
    } else {
        Ok(0)
    }
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    data_root: PathBuf,
    /// Directory of trained artifacts (subdirectories with manifest.json)
    #[arg(long, conflicts_with = "predictions")]
    artifacts: Option<PathBuf>,
    /// Directory of stored predictions (<language>/<category>.csv with
    /// columns comment_sentence_id,prediction)
    #[arg(long)]
    predictions: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long = "category")]
    categories: Vec<String>,
    /// Also emit an SVG bar chart of F1 against the baseline
    #[arg(long)]
    plot: bool,
    #[arg(long)]
    aliases: Option<PathBuf>,
}

#[derive(Serialize)]
struct EvaluateEcho {
    data_root: PathBuf,
    artifacts: Option<PathBuf>,
    predictions: Option<PathBuf>,
    output_root: PathBuf,
    categories: Vec<String>,
    plot: bool,
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<i32, CliError> {
    let aliases = load_aliases(&args.aliases)?;
    let results = match (&args.artifacts, &args.predictions) {
        (Some(dir), None) => evaluate_artifacts(dir, &args, &aliases)?,
        (None, Some(dir)) => evaluate_predictions(dir, &args, &aliases)?,
        _ => return Err(usage("exactly one of --artifacts or --predictions is required")),
    };
    if results.is_empty() {
        return Err(usage("nothing to evaluate"));
    }

    let report = build_report(&results, &baseline_table());
    write_echo(
        &args.out,
        "evaluate",
        &EvaluateEcho {
            data_root: args.data_root.clone(),
            artifacts: args.artifacts.clone(),
            predictions: args.predictions.clone(),
            output_root: args.out.clone(),
            categories: args.categories.clone(),
            plot: args.plot,
        },
    )
    .map_err(CliError::Runtime)?;
    emit_report(&report, &args.out, args.plot)?;
    print!("{}", render_table(&report));
    Ok(0)
}

fn emit_report(report: &EvalReport, out: &Path, plot: bool) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(|e| anyhow!(e))?;
    fs::write(out.join("report.csv"), render_csv(report)).map_err(|e| anyhow!(e))?;
    fs::write(out.join("report.txt"), render_table(report)).map_err(|e| anyhow!(e))?;
    if plot {
        fs::write(out.join("report.svg"), render_svg(report)).map_err(|e| anyhow!(e))?;
    }
    if let Some(score) = report.submission_score {
        #[derive(Serialize)]
        struct Submission {
            average_f1: f64,
            outperformed_fraction: f64,
            submission_score: f64,
        }
        let json = serde_json::to_string_pretty(&Submission {
            average_f1: report.averages.f1,
            outperformed_fraction: report.outperformed_fraction,
            submission_score: score,
        })
        .map_err(|e| anyhow!(e))?;
        fs::write(out.join("submission.json"), json).map_err(|e| anyhow!(e))?;
    }
    Ok(())
}

type CategoryResult = (CategoryId, CategoryMetrics, ConfusionCounts);

fn category_filter(args: &[String]) -> Result<Option<Vec<CategoryId>>, CliError> {
    if args.is_empty() {
        return Ok(None);
    }
    Ok(Some(
        args.iter()
            .map(|s| parse_category(s))
            .collect::<Result<Vec<_>, _>>()?,
    ))
}

fn evaluate_artifacts(
    dir: &Path,
    args: &EvaluateArgs,
    aliases: &ColumnAliases,
) -> Result<Vec<CategoryResult>, CliError> {
    let filter = category_filter(&args.categories)?;
    let mut results = Vec::new();
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("scanning {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("manifest.json").is_file())
        .collect();
    entries.sort();
    for path in entries {
        let artifact = ClassifierArtifact::load(&path).map_err(|e| anyhow!(e))?;
        if let Some(filter) = &filter {
            if !filter.contains(&artifact.category) {
                continue;
            }
        }
        let csv_path = dataset_path(&args.data_root, &artifact.category);
        let (dataset, _) = load_category_with_aliases(&csv_path, &artifact.category, aliases)
            .with_context(|| format!("loading {}", csv_path.display()))?;
        let (metrics, counts) = evaluate_artifact(&artifact, &dataset).map_err(|e| anyhow!(e))?;
        results.push((artifact.category.clone(), metrics, counts));
    }
    Ok(results)
}

fn evaluate_predictions(
    dir: &Path,
    args: &EvaluateArgs,
    aliases: &ColumnAliases,
) -> Result<Vec<CategoryResult>, CliError> {
    let filter = category_filter(&args.categories)?;
    let mut results = Vec::new();
    for category in official_categories() {
        if let Some(filter) = &filter {
            if !filter.contains(&category) {
                continue;
            }
        }
        let pred_path = dataset_path(dir, &category);
        if !pred_path.is_file() {
            continue;
        }
        let csv_path = dataset_path(&args.data_root, &category);
        let (dataset, _) = load_category_with_aliases(&csv_path, &category, aliases)
            .with_context(|| format!("loading {}", csv_path.display()))?;
        let predictions = load_prediction_file(&pred_path)?;
        let mut preds = Vec::with_capacity(dataset.test.len());
        let mut labels = Vec::with_capacity(dataset.test.len());
        for sample in &dataset.test {
            let p = predictions.get(&sample.id).ok_or_else(|| {
                anyhow!(
                    "{}: no prediction for test sample id {}",
                    pred_path.display(),
                    sample.id
                )
            })?;
            preds.push(*p);
            labels.push(sample.label);
        }
        let counts = confusion(&preds, &labels).map_err(|e| anyhow!(e))?;
        results.push((category, category_metrics(&counts), counts));
    }
    Ok(results)
}

fn load_prediction_file(path: &Path) -> Result<BTreeMap<i64, bool>, CliError> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let headers = reader.headers().map_err(|e| anyhow!(e))?.clone();
    let id_col = headers
        .iter()
        .position(|h| h.eq_ignore_ascii_case("comment_sentence_id"))
        .ok_or_else(|| anyhow!("{}: missing comment_sentence_id column", path.display()))?;
    let pred_col = headers
        .iter()
        .position(|h| h.eq_ignore_ascii_case("prediction"))
        .ok_or_else(|| anyhow!("{}: missing prediction column", path.display()))?;
    let mut map = BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| anyhow!(e))?;
        let id: i64 = record
            .get(id_col)
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|_| anyhow!("{}: row {}: bad id", path.display(), i + 1))?;
        let pred = match record.get(pred_col).unwrap_or("").trim() {
            "0" => false,
            "1" => true,
            other => {
                return Err(anyhow!(
                    "{}: row {}: prediction must be 0 or 1, got '{other}'",
                    path.display(),
                    i + 1
                )
                .into())
            }
        };
        map.insert(id, pred);
    }
    Ok(map)
}

// ---------------------------------------------------------------------------
// classify
// ---------------------------------------------------------------------------

#[derive(Args)]
struct ClassifyArgs {
    /// Artifact directory produced by `train`
    #[arg(long)]
    artifact: PathBuf,
    /// Sentence to classify
    #[arg(long, conflicts_with = "batch")]
    text: Option<String>,
    /// Classname appended for with-classname artifacts
    #[arg(long)]
    classname: Option<String>,
    /// Read sentences from stdin, one per line (optionally
    /// sentence<TAB>classname)
    #[arg(long)]
    batch: bool,
}

fn cmd_classify(args: ClassifyArgs) -> Result<i32, CliError> {
    let artifact = ClassifierArtifact::load(&args.artifact).map_err(|e| anyhow!(e))?;
    let classify_one = |sentence: &str, classname: Option<&str>| -> Result<(), CliError> {
        let (label, proba) = artifact
            .classify(sentence, classname)
            .map_err(|e| match e {
                PipelineError::VariantMismatch { .. } => usage(e.to_string()),
                other => CliError::Runtime(anyhow!(other)),
            })?;
        println!(
            "{}\t{}\t{proba}",
            artifact.category,
            if label { 1 } else { 0 }
        );
        Ok(())
    };

    if args.batch {
        let stdin = std::io::stdin();
        for line in stdin.lock().lines() {
            let line = line.map_err(|e| anyhow!(e))?;
            if line.trim().is_empty() {
                continue;
            }
            match line.split_once('\t') {
                Some((sentence, classname)) => classify_one(sentence, Some(classname))?,
                None => classify_one(&line, args.classname.as_deref())?,
            }
        }
        Ok(0)
    } else {
        let text = args
            .text
            .as_deref()
            .ok_or_else(|| usage("provide --text or --batch"))?;
        classify_one(text, args.classname.as_deref())?;
        Ok(0)
    }
}

// ---------------------------------------------------------------------------
// tune
// ---------------------------------------------------------------------------

#[derive(Args)]
struct TuneArgs {
    #[arg(long)]
    data_root: PathBuf,
    /// Category to tune on, <language>/<name>
    #[arg(long)]
    category: String,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "toy-hash-encoder:64:0")]
    backend: String,
    #[arg(long, default_value = "with-classname")]
    variant: String,
    /// Score trials on the real test split instead of a train holdout
    /// (leaks test data; mirrors the published procedure)
    #[arg(long)]
    use_test_split: bool,
    #[arg(long)]
    pair_iterations: Option<u32>,
    /// Where to write trials.csv, best.json, and the config echo
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    aliases: Option<PathBuf>,
}

#[derive(Serialize)]
struct TuneEcho {
    data_root: PathBuf,
    category: String,
    backend_id: String,
    variant: FormattingVariant,
    space: SearchSpace,
    options: TuneOptions,
}

fn cmd_tune(args: TuneArgs) -> Result<i32, CliError> {
    if args.trials == 0 {
        return Err(usage("--trials must be at least 1"));
    }
    let category = parse_category(&args.category)?;
    let aliases = load_aliases(&args.aliases)?;
    let path = dataset_path(&args.data_root, &category);
    let (dataset, _) = load_category_with_aliases(&path, &category, &aliases)
        .with_context(|| format!("loading {}", path.display()))?;
    let backend = create_backend(&args.backend).map_err(|e| anyhow!(e))?;
    let variant = parse_variant(&args.variant)?;

    let mut train_options = TrainOptions::default();
    if let Some(r) = args.pair_iterations {
        train_options.pair_iterations = r;
    }
    let options = TuneOptions {
        trials: args.trials,
        seed: args.seed,
        split: if args.use_test_split {
            TuneObjectiveSplit::TestSet
        } else {
            TuneObjectiveSplit::Holdout
        },
        variant,
        train_options,
        ..TuneOptions::default()
    };
    let space = SearchSpace::default();
    let (best, history) =
        tune_hyperparams(&dataset, backend.as_ref(), &space, &options).map_err(|e| anyhow!(e))?;

    println!(
        "{:<6} {:<12} {:<7} {:<11} {:<10} {:<9} ms",
        "trial", "lr", "epochs", "head iters", "solver", "F1"
    );
    for t in &history {
        println!(
            "{:<6} {:<12.4e} {:<7} {:<11} {:<10} {:<9.4} {}",
            t.index,
            t.hyperparams.learning_rate,
            t.hyperparams.epochs,
            t.hyperparams.head_max_iterations,
            t.hyperparams.solver.to_string(),
            t.objective_f1,
            t.wall_ms
        );
    }
    println!(
        "best: lr {:.4e}, epochs {}, head iters {}, solver {}",
        best.learning_rate, best.epochs, best.head_max_iterations, best.solver
    );

    if let Some(out) = &args.out {
        write_echo(
            out,
            "tune",
            &TuneEcho {
                data_root: args.data_root.clone(),
                category: args.category.clone(),
                backend_id: args.backend.clone(),
                variant,
                space,
                options,
            },
        )
        .map_err(CliError::Runtime)?;
        let mut csv = String::from("trial,learning_rate,epochs,head_max_iterations,solver,objective_f1,wall_ms\n");
        for t in &history {
            csv.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                t.index,
                t.hyperparams.learning_rate,
                t.hyperparams.epochs,
                t.hyperparams.head_max_iterations,
                t.hyperparams.solver,
                t.objective_f1,
                t.wall_ms
            ));
        }
        fs::write(out.join("trials.csv"), csv).map_err(|e| anyhow!(e))?;
        let best_json = serde_json::to_string_pretty(&best).map_err(|e| anyhow!(e))?;
        fs::write(out.join("best.json"), best_json).map_err(|e| anyhow!(e))?;
    }
    Ok(0)
}

// ---------------------------------------------------------------------------
// benchmark
// ---------------------------------------------------------------------------

#[derive(Args)]
struct BenchmarkArgs {
    #[arg(long)]
    data_root: PathBuf,
    /// Category to benchmark on, <language>/<name>
    #[arg(long)]
    category: String,
    /// Comma-separated backend ids
    #[arg(long, default_value = "toy-hash-encoder:64:0")]
    backends: String,
    #[arg(long, default_value_t = DEFAULT_FEW_SHOT_PER_CLASS)]
    n_per_class: usize,
    #[arg(long, default_value_t = DEFAULT_FEW_SHOT_EPOCHS)]
    epochs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    aliases: Option<PathBuf>,
}

#[derive(Serialize)]
struct BenchmarkEcho {
    data_root: PathBuf,
    category: String,
    backends: Vec<String>,
    n_per_class: usize,
    epochs: usize,
    seed: u64,
}

fn cmd_benchmark(args: BenchmarkArgs) -> Result<i32, CliError> {
    let category = parse_category(&args.category)?;
    let aliases = load_aliases(&args.aliases)?;
    let path = dataset_path(&args.data_root, &category);
    let (dataset, _) = load_category_with_aliases(&path, &category, &aliases)
        .with_context(|| format!("loading {}", path.display()))?;

    let ids: Vec<String> = args
        .backends
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    if ids.is_empty() {
        return Err(usage("--backends must name at least one backend"));
    }
    let mut backends = Vec::new();
    for id in &ids {
        backends.push(create_backend(id).map_err(|e| anyhow!(e))?);
    }

    let rows = few_shot_benchmark(&backends, &dataset, args.n_per_class, args.epochs, args.seed)
        .map_err(|e| anyhow!(e))?;

    println!("{:<36} {:>9} {:>7} {:>8}", "backend", "accuracy", "F1", "time");
    let mut csv = String::from("backend,accuracy,f1,wall_ms\n");
    for row in &rows {
        println!(
            "{:<36} {:>9.2} {:>7.3} {:>8}",
            row.backend_id,
            row.accuracy,
            row.f1,
            format_mm_ss(row.wall_ms)
        );
        csv.push_str(&format!(
            "{},{},{},{}\n",
            row.backend_id, row.accuracy, row.f1, row.wall_ms
        ));
    }
    if let Some(out) = &args.out {
        write_echo(
            out,
            "benchmark",
            &BenchmarkEcho {
                data_root: args.data_root.clone(),
                category: args.category.clone(),
                backends: ids,
                n_per_class: args.n_per_class,
                epochs: args.epochs,
                seed: args.seed,
            },
        )
        .map_err(CliError::Runtime)?;
        fs::write(out.join("benchmark.csv"), csv).map_err(|e| anyhow!(e))?;
    }
    Ok(0)
}

fn format_mm_ss(ms: u64) -> String {
    format!("{}:{:02}", ms / 60_000, (ms / 1000) % 60)
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

#[derive(Args)]
struct ReportArgs {
    /// A report.csv previously emitted by `evaluate`
    #[arg(long)]
    metrics: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    plot: bool,
}

#[derive(Serialize)]
struct ReportEcho {
    metrics: PathBuf,
    output_root: PathBuf,
    plot: bool,
}

fn cmd_report(args: ReportArgs) -> Result<i32, CliError> {
    let results = parse_report_csv(&args.metrics)?;
    if results.is_empty() {
        return Err(usage(format!("{}: no category rows", args.metrics.display())));
    }
    let report = build_report(&results, &baseline_table());
    write_echo(
        &args.out,
        "report",
        &ReportEcho {
            metrics: args.metrics.clone(),
            output_root: args.out.clone(),
            plot: args.plot,
        },
    )
    .map_err(CliError::Runtime)?;
    emit_report(&report, &args.out, args.plot)?;
    print!("{}", render_table(&report));
    Ok(0)
}

fn parse_report_csv(path: &Path) -> Result<Vec<CategoryResult>, CliError> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut results = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| anyhow!(e))?;
        let language = record.get(0).unwrap_or("");
        if language == "average" {
            continue;
        }
        let language = Language::parse(language)
            .ok_or_else(|| anyhow!("{}: bad language '{language}'", path.display()))?;
        let name = record.get(1).unwrap_or("").to_string();
        let num = |i: usize| -> Result<f64, CliError> {
            record
                .get(i)
                .unwrap_or("")
                .parse()
                .map_err(|_| anyhow!("{}: bad numeric field {i}", path.display()).into())
        };
        let int = |i: usize| -> Result<usize, CliError> {
            record
                .get(i)
                .unwrap_or("")
                .parse()
                .map_err(|_| anyhow!("{}: bad count field {i}", path.display()).into())
        };
        results.push((
            CategoryId::new(language, name),
            CategoryMetrics {
                precision: num(6)?,
                recall: num(7)?,
                f1: num(8)?,
                weighted_f1: num(9)?,
                accuracy: num(10)?,
            },
            ConfusionCounts {
                tp: int(2)?,
                fp: int(3)?,
                tn: int(4)?,
                fn_: int(5)?,
            },
        ));
    }
    Ok(results)
}
