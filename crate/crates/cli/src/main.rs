use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use deprec_parse::baseline::split_baseline;
use deprec_parse::corpus::{
    extract_deprecations, item_to_example, read_dataset, write_dataset, AnnotatedExample, ExtractConfig, Source,
};
use deprec_parse::decoder::{predict, DEFAULT_BEAM_WIDTH};
use deprec_parse::metrics::{evaluate_corpus, fold_assignment, FoldInfo, Prediction};
use deprec_parse::oracle::{find_gold_sequence, oracle_training_set, OracleConfig, OracleRecord};
use deprec_parse::scorer::{train, ScorerModel, TrainConfig};
use deprec_parse::tree::annotation_strings_to_tree;

/// Parses API-deprecation notes into semantic trees with a transition-based parser.
#[derive(Debug, Parser)]
#[command(name = "deprec-parse", version)]
struct Cli {
    /// Worker threads for per-example work (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Extract deprecation items from release-notes HTML into a dataset.
    Extract(ExtractArgs),
    /// Search gold transition sequences for annotated examples.
    Oracle(OracleArgs),
    /// Train a transition scorer on oracle sequences.
    Train(TrainArgs),
    /// Decode a dataset with a trained model or by cross-validation.
    Parse(ParseArgs),
    /// Score predictions against the gold annotations.
    Eval(EvalArgs),
    /// Run the split-on-"deprecated" baseline.
    Baseline(BaselineArgs),
    /// Build the gold tree for deprecated and replacement expressions.
    AnnotateToTree(AnnotateArgs),
}

#[derive(Debug, Args)]
struct ExtractArgs {
    /// HTML files to read.
    #[arg(required = true)]
    html: Vec<PathBuf>,
    #[arg(long)]
    library: String,
    #[arg(long, default_value = "")]
    version: String,
    #[arg(long)]
    url: Option<String>,
    /// Section headings that hold deprecations (case-insensitive).
    #[arg(long = "heading", default_values_t = ["deprecations".to_string(), "deprecated".to_string()])]
    headings: Vec<String>,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
struct OracleOpts {
    #[arg(long, default_value_t = 100)]
    oracle_breadth: usize,
    #[arg(long, default_value_t = 15)]
    oracle_depth: usize,
    /// Minimum subtree overlap for an oracle sequence to be accepted.
    #[arg(long, default_value_t = 0.90)]
    threshold: f64,
}

impl OracleOpts {
    fn config(&self) -> OracleConfig {
        OracleConfig {
            max_breadth: self.oracle_breadth,
            max_depth: self.oracle_depth,
            accept_threshold: self.threshold,
        }
    }
}

#[derive(Debug, Clone, Args)]
struct TrainOpts {
    #[arg(long, default_value_t = 20)]
    epochs: usize,
    #[arg(long, default_value_t = 0.1)]
    learning_rate: f64,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    #[arg(long, default_value_t = 1e-4)]
    l2: f64,
    /// Feature hash space has 2^hash_bits buckets.
    #[arg(long, default_value_t = 20)]
    hash_bits: u32,
    #[arg(long, env = "DEPREC_PARSE_SEED", default_value_t = 0)]
    seed: u64,
}

impl TrainOpts {
    fn config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            batch_size: self.batch_size,
            l2: self.l2,
            seed: self.seed,
            dim_bits: self.hash_bits,
        }
    }
}

#[derive(Debug, Args)]
struct OracleArgs {
    dataset: PathBuf,
    #[command(flatten)]
    oracle: OracleOpts,
    /// Only run the example with this id.
    #[arg(long)]
    id: Option<String>,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    dataset: PathBuf,
    #[arg(long, short)]
    model: PathBuf,
    #[command(flatten)]
    oracle: OracleOpts,
    #[command(flatten)]
    train: TrainOpts,
}

#[derive(Debug, Args)]
struct ParseArgs {
    dataset: PathBuf,
    /// Trained model; without it the dataset is parsed by cross-validation.
    #[arg(long, short, conflicts_with = "folds")]
    model: Option<PathBuf>,
    /// Cross-validation folds (used when no model is given).
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_BEAM_WIDTH)]
    beam_width: usize,
    #[command(flatten)]
    oracle: OracleOpts,
    #[command(flatten)]
    train: TrainOpts,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    dataset: PathBuf,
    predictions: PathBuf,
    /// Recompute the fold assignment of a cross-validated run.
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long, env = "DEPREC_PARSE_SEED", default_value_t = 0)]
    seed: u64,
    /// System name for the results table.
    #[arg(long, default_value = "parser")]
    system: String,
    /// Write the full report as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BaselineArgs {
    dataset: PathBuf,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AnnotateArgs {
    /// Deprecated code expressions.
    #[arg(long, required = true, num_args = 1..)]
    depr: Vec<String>,
    /// Replacement code expressions.
    #[arg(long, num_args = 1..)]
    repl: Vec<String>,
}

const DEFAULT_FOLDS: usize = 10;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if let Err(err) = run(Cli::parse()) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build_global()
        .context("starting worker pool")?;
    log::info!("jobs: {}", rayon::current_num_threads());
    match cli.command {
        Command::Extract(args) => extract(args),
        Command::Oracle(args) => oracle(args),
        Command::Train(args) => train_model(args),
        Command::Parse(args) => parse(args),
        Command::Eval(args) => eval(args),
        Command::Baseline(args) => baseline(args),
        Command::AnnotateToTree(args) => annotate(args),
    }
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => std::io::stdout().write_all(text.as_bytes()).context("writing stdout"),
    }
}

fn jsonl<T: Serialize>(items: &[T]) -> Result<String> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item)?);
        out.push('\n');
    }
    Ok(out)
}

fn load(path: &Path) -> Result<Vec<AnnotatedExample>> {
    let data = read_dataset(path)?;
    log::info!("{}: {} examples", path.display(), data.len());
    Ok(data)
}

fn extract(args: ExtractArgs) -> Result<()> {
    let cfg = ExtractConfig {
        synonyms: args.headings.clone(),
        ..ExtractConfig::default()
    };
    let source = Source {
        library: args.library.clone(),
        version: args.version.clone(),
        url: args.url.clone(),
    };
    log::info!("extract: library={} version={:?} headings={:?}", source.library, source.version, cfg.synonyms);
    let mut examples = Vec::new();
    for path in &args.html {
        let html = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let items = extract_deprecations(&html, &source, &cfg);
        log::info!("{}: {} items", path.display(), items.len());
        for item in items {
            let id = format!("{}-{}", source.library, examples.len());
            examples.push(item_to_example(&item, id));
        }
    }
    match &args.output {
        Some(path) => write_dataset(&examples, path)?,
        None => emit(None, &deprec_parse::corpus::to_jsonl(&examples))?,
    }
    Ok(())
}

fn oracle(args: OracleArgs) -> Result<()> {
    let cfg = args.oracle.config();
    cfg.check()?;
    log::info!("oracle: {cfg:?}");
    let data = load(&args.dataset)?;
    let selected: Vec<&AnnotatedExample> = data
        .iter()
        .filter(|e| args.id.as_ref().is_none_or(|id| &e.id == id))
        .filter(|e| e.has_annotation() && !e.code_spans.is_empty())
        .collect();
    if let Some(id) = &args.id {
        if selected.is_empty() {
            bail!("no annotated example with id `{id}`");
        }
    }
    let records: Vec<OracleRecord> = selected
        .par_iter()
        .map(|e| -> Result<OracleRecord> {
            let gold = e.gold_semtree()?.context("missing gold tree")?;
            let result = find_gold_sequence(&e.entities(), &gold, &cfg)?;
            Ok(OracleRecord { id: e.id.clone(), result })
        })
        .collect::<Result<_>>()?;
    let accepted = records.iter().filter(|r| r.result.accepted).count();
    let exact = records.iter().filter(|r| r.result.overlap >= 1.0).count();
    log::info!("oracle accepted {accepted}/{} (exact {exact})", records.len());
    emit(args.output.as_deref(), &jsonl(&records)?)
}

fn fit(data: &[AnnotatedExample], oracle: &OracleOpts, opts: &TrainOpts) -> Result<ScorerModel> {
    let (instances, records) = oracle_training_set(data, &oracle.config())?;
    let used = records.iter().filter(|r| r.result.accepted && r.result.terminal).count();
    log::info!("training on {used}/{} oracle sequences, {} decisions", records.len(), instances.len());
    Ok(train(&instances, &opts.config())?)
}

fn train_model(args: TrainArgs) -> Result<()> {
    log::info!("train: {:?} {:?}", args.oracle.config(), args.train.config());
    let data = load(&args.dataset)?;
    let model = fit(&data, &args.oracle, &args.train)?;
    model.save(&args.model)?;
    log::info!(
        "model written to {} (training accuracy {:.3})",
        args.model.display(),
        model.meta().train_accuracy
    );
    Ok(())
}

fn decode_all(model: &ScorerModel, examples: &[&AnnotatedExample], width: usize) -> Result<Vec<Prediction>> {
    examples
        .par_iter()
        .map(|e| predict(model, e, width).with_context(|| format!("decoding {}", e.id)))
        .collect()
}

fn parse(args: ParseArgs) -> Result<()> {
    if args.beam_width == 0 {
        bail!("--beam-width must be at least 1");
    }
    let data = load(&args.dataset)?;
    let predictions = match &args.model {
        Some(path) => {
            log::info!("parse: model={} beam_width={}", path.display(), args.beam_width);
            let model = ScorerModel::load(path)?;
            decode_all(&model, &data.iter().collect::<Vec<_>>(), args.beam_width)?
        }
        None => {
            let k = args.folds.unwrap_or(DEFAULT_FOLDS);
            if k < 2 {
                bail!("--folds must be at least 2");
            }
            log::info!(
                "parse: {k}-fold cross-validation seed={} beam_width={} {:?} {:?}",
                args.train.seed,
                args.beam_width,
                args.oracle.config(),
                args.train.config()
            );
            let folds = fold_assignment(data.len(), k, args.train.seed);
            let mut predictions: Vec<Option<Prediction>> = vec![None; data.len()];
            for fold in 0..k {
                let train_set: Vec<AnnotatedExample> = data
                    .iter()
                    .zip(&folds)
                    .filter(|(_, &f)| f != fold)
                    .map(|(e, _)| e.clone())
                    .collect();
                let test: Vec<(usize, &AnnotatedExample)> =
                    data.iter().enumerate().filter(|(i, _)| folds[*i] == fold).collect();
                if test.is_empty() {
                    continue;
                }
                log::info!("fold {fold}: {} train, {} test", train_set.len(), test.len());
                let model = fit(&train_set, &args.oracle, &args.train)
                    .with_context(|| format!("training fold {fold}"))?;
                let examples: Vec<&AnnotatedExample> = test.iter().map(|(_, e)| *e).collect();
                for ((i, _), p) in test.iter().zip(decode_all(&model, &examples, args.beam_width)?) {
                    predictions[*i] = Some(p);
                }
            }
            predictions.into_iter().flatten().collect()
        }
    };
    let partial = predictions.iter().filter(|p| p.partial).count();
    log::info!("{} predictions ({partial} partial)", predictions.len());
    emit(args.output.as_deref(), &jsonl(&predictions)?)
}

fn read_predictions(path: &Path) -> Result<Vec<Prediction>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).with_context(|| format!("{}: line {}", path.display(), i + 1)))
        .collect()
}

fn eval(args: EvalArgs) -> Result<()> {
    log::info!("eval: folds={:?} seed={}", args.folds, args.seed);
    let data = load(&args.dataset)?;
    let predictions = read_predictions(&args.predictions)?;
    let folds = args.folds.map(|k| fold_assignment(data.len(), k, args.seed));
    let mut report = evaluate_corpus(&predictions, &data, folds.as_deref())?;
    if let Some(k) = args.folds {
        report.folds = Some(FoldInfo { k, seed: args.seed });
    }
    print!("{}", report.render_table(&args.system));
    if let Some(path) = &args.report {
        let json = serde_json::to_string_pretty(&report)?;
        fs::write(path, json + "\n").with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn baseline(args: BaselineArgs) -> Result<()> {
    log::info!("baseline: split on deprecate/deprecated/deprecates");
    let data = load(&args.dataset)?;
    let predictions: Vec<Prediction> = data
        .iter()
        .map(|e| {
            let (depr, repl) = split_baseline(e);
            Prediction::from_sets(e.id.clone(), depr.into_iter().collect(), repl.into_iter().collect())
        })
        .collect();
    emit(args.output.as_deref(), &jsonl(&predictions)?)
}

fn annotate(args: AnnotateArgs) -> Result<()> {
    let tree = annotation_strings_to_tree(&args.depr, &args.repl)?;
    println!("{}", tree.to_bracketed());
    Ok(())
}
