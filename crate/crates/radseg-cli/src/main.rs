//! Command-line driver for the radar pulse segmentation pipeline:
//! dataset generation, training, evaluation, report merging, example
//! inspection, and the gradient self-check.
//!
//! Every command that owns an output directory writes the fully
//! resolved configuration next to its results, so a run can always be
//! reproduced from its artifacts. Exit codes are stable: 2 for
//! configuration problems, 3 for I/O and malformed inputs, 4 for a
//! training loss that left the reals, 5 for checkpoint or dataset
//! incompatibilities, 6 for metric-bin mismatches when merging reports.

use clap::{Args, Parser, Subcommand};
use radseg::config::{ConfigError, RunConfig, SPLITS};
use radseg::data::{generate_split, DataError, Dataset};
use radseg::eval::report::SUMMARY_BINS;
use radseg::eval::{
    evaluate_baseline, evaluate_model, predict_mask, render_svg_chart, render_text_table,
    write_metrics_csv, Baseline, EvalError, EvalReport, Metric,
};
use radseg::model::{ArchConfig, Checkpoint, CheckpointError, StageInput, TcnConfig, UNetConfig};
use radseg::nn::gradcheck::run_suite;
use radseg::synth::WaveformClass;
use radseg::train::{TrainError, TrainSession};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_NAN: u8 = 4;
const EXIT_INCOMPATIBLE: u8 = 5;
const EXIT_BINS: u8 = 6;

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        let code = match &e {
            ConfigError::Io(_) => EXIT_IO,
            _ => EXIT_CONFIG,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<DataError> for Failure {
    fn from(e: DataError) -> Self {
        let code = match &e {
            DataError::OutOfRange { .. } => EXIT_CONFIG,
            DataError::WindowTooLong { .. } | DataError::EmptySplit => EXIT_CONFIG,
            _ => EXIT_IO,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<CheckpointError> for Failure {
    fn from(e: CheckpointError) -> Self {
        let code = match &e {
            CheckpointError::Io(_) => EXIT_IO,
            _ => EXIT_INCOMPATIBLE,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<TrainError> for Failure {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::NanLoss { .. } => Failure::new(EXIT_NAN, e.to_string()),
            TrainError::InvalidConfig(_) => Failure::new(EXIT_CONFIG, e.to_string()),
            TrainError::Data(d) => d.into(),
            TrainError::Checkpoint(c) => c.into(),
        }
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::BinMismatch { .. } | EvalError::MismatchedReports(_) => {
                Failure::new(EXIT_BINS, e.to_string())
            }
            EvalError::MissingNormalizer => Failure::new(EXIT_INCOMPATIBLE, e.to_string()),
            EvalError::Data(d) => d.into(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::new(EXIT_IO, e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "radseg",
    version,
    about = "Synthesize interleaved radar pulse datasets, train segmentation networks on them, and evaluate across SNR"
)]
struct Cli {
    /// Worker thread count (overrides the RADSEG_THREADS environment
    /// variable; default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the train/val/test shards with exact masks.
    Generate(GenerateArgs),
    /// Train a segmentation model on a generated dataset.
    Train(TrainArgs),
    /// Evaluate a checkpoint or baseline over a split, binned by SNR.
    Eval(EvalArgs),
    /// Merge evaluation reports into a comparison table, CSV, and charts.
    Report(ReportArgs),
    /// Dump one example (IQ, truth mask, optional prediction) for inspection.
    Inspect(InspectArgs),
    /// Check analytic gradients of every layer against finite differences.
    Gradcheck(GradcheckArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Run configuration JSON; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset directory (overrides the config's data.dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Generation seed (overrides the config's generation.global_seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Only generate the named split (repeatable; default: all three).
    #[arg(long = "split")]
    splits: Vec<String>,
    /// Examples for the train split (overrides the config).
    #[arg(long)]
    train_count: Option<usize>,
    /// Examples for the val split (overrides the config).
    #[arg(long)]
    val_count: Option<usize>,
    /// Examples for the test split (overrides the config).
    #[arg(long)]
    test_count: Option<usize>,
}

#[derive(Args)]
struct TrainArgs {
    /// Run configuration JSON; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset directory holding the train (and optionally val) split.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Output directory for checkpoints, history, and resolved config.
    #[arg(long)]
    out: PathBuf,
    /// Backbone: "unet" or "tcn" (overrides the config's model section).
    #[arg(long)]
    model: Option<String>,
    /// Stage count for the multi-stage model.
    #[arg(long)]
    stages: Option<usize>,
    /// Feed refinement stages "probabilities" or "logits".
    #[arg(long)]
    stage_input: Option<String>,
    /// Total epochs to reach (a resumed run continues to this target).
    #[arg(long)]
    epochs: Option<u64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Training window length in samples.
    #[arg(long)]
    window: Option<usize>,
    /// Parameter initialisation / shuffling seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Continue from this checkpoint instead of fresh parameters.
    #[arg(long)]
    resume: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Run configuration JSON; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset directory.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Split to evaluate (default: test).
    #[arg(long, default_value = "test")]
    split: String,
    /// Checkpoint to evaluate. Exactly one of this or --baseline.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Model-free baseline: "oracle", "all-zero", or "energy".
    #[arg(long)]
    baseline: Option<String>,
    /// Shorthand for --baseline oracle.
    #[arg(long, default_value_t = false)]
    oracle: bool,
    /// Output directory for the report, CSV, and summary.
    #[arg(long)]
    out: PathBuf,
    /// Inference window length (overrides the config's eval.window).
    #[arg(long)]
    window: Option<usize>,
    /// Positive-decision probability threshold (overrides the config).
    #[arg(long)]
    threshold: Option<f64>,
    /// Label used in the report (default: architecture or baseline name).
    #[arg(long)]
    name: Option<String>,
    /// Comma-separated summary bins in dB; requested bins must exist.
    /// Default: the headline bins that are present in the results.
    #[arg(long, allow_hyphen_values = true)]
    summary_bins: Option<String>,
}

#[derive(Args)]
struct ReportArgs {
    /// Evaluation report JSON files produced by `radseg eval`.
    #[arg(required = true)]
    reports: Vec<PathBuf>,
    /// Output directory for the combined CSV, charts, and table.
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated summary bins in dB; requested bins must exist in
    /// every report. Default: headline bins present in all reports.
    #[arg(long, allow_hyphen_values = true)]
    summary_bins: Option<String>,
}

#[derive(Args)]
struct InspectArgs {
    /// Run configuration JSON; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset directory.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Split to read from (default: train).
    #[arg(long, default_value = "train")]
    split: String,
    /// Example index within the split.
    #[arg(long)]
    index: usize,
    /// Output directory for the sample dump.
    #[arg(long)]
    out: PathBuf,
    /// Optional checkpoint; adds predictions and per-sample outcome
    /// labels to the dump.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Inference window length (overrides the config's eval.window).
    #[arg(long)]
    window: Option<usize>,
}

#[derive(Args)]
struct GradcheckArgs {
    /// Random restarts per layer case.
    #[arg(long, default_value_t = 3)]
    seeds: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(f) = init_threads(cli.jobs) {
        eprintln!("radseg: {}", f.message);
        return ExitCode::from(f.code);
    }
    let result = match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Train(args) => cmd_train(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Report(args) => cmd_report(args),
        Command::Inspect(args) => cmd_inspect(args),
        Command::Gradcheck(args) => cmd_gradcheck(args),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("radseg: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

/// Thread count precedence: --jobs, then RADSEG_THREADS, then rayon's
/// default (all cores).
fn init_threads(jobs: Option<usize>) -> Result<(), Failure> {
    let threads = match jobs {
        Some(n) => Some(n),
        None => match std::env::var("RADSEG_THREADS") {
            Ok(v) => Some(v.parse::<usize>().map_err(|_| {
                Failure::new(
                    EXIT_CONFIG,
                    format!("RADSEG_THREADS must be a positive integer, got {v:?}"),
                )
            })?),
            Err(_) => None,
        },
    };
    if let Some(n) = threads {
        if n == 0 {
            return Err(Failure::new(EXIT_CONFIG, "thread count must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::new(EXIT_CONFIG, format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn load_run_config(path: Option<&Path>) -> Result<RunConfig, Failure> {
    match path {
        Some(p) => Ok(RunConfig::load(p)?),
        None => Ok(RunConfig::default()),
    }
}

/// A checkpoint that is absent or unreadable is an incompatibility
/// (exit 5), not a generic I/O failure: the run cannot proceed with
/// the requested model.
fn load_checkpoint(path: &Path) -> Result<Checkpoint, Failure> {
    if !path.exists() {
        return Err(Failure::new(
            EXIT_INCOMPATIBLE,
            format!("checkpoint not found: {}", path.display()),
        ));
    }
    Checkpoint::load(path).map_err(|e| {
        Failure::new(
            EXIT_INCOMPATIBLE,
            format!("{}: {e}", path.display()),
        )
    })
}

fn write_resolved_config(out: &Path, config: &RunConfig) -> Result<(), Failure> {
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("config.resolved.json"), config.to_json_pretty())?;
    Ok(())
}

fn parse_bins(spec: &str) -> Result<Vec<f64>, Failure> {
    spec.split(',')
        .map(|s| {
            s.trim().parse::<f64>().map_err(|_| {
                Failure::new(EXIT_CONFIG, format!("bad SNR bin {s:?} in --summary-bins"))
            })
        })
        .collect()
}

/// Headline bins that every report actually has; all bins of the first
/// report when none of the headline bins are shared.
fn default_summary_bins(reports: &[EvalReport]) -> Vec<f64> {
    let shared: Vec<f64> = SUMMARY_BINS
        .iter()
        .copied()
        .filter(|&b| reports.iter().all(|r| r.row_for(b).is_some()))
        .collect();
    if !shared.is_empty() {
        return shared;
    }
    reports[0]
        .rows
        .iter()
        .map(|r| r.snr_db)
        .filter(|&b| reports.iter().all(|r| r.row_for(b).is_some()))
        .collect()
}

fn cmd_generate(args: GenerateArgs) -> Result<ExitCode, Failure> {
    let mut config = load_run_config(args.config.as_deref())?;
    if let Some(out) = args.out {
        config.data.dir = out;
    }
    if let Some(seed) = args.seed {
        config.generation.global_seed = seed;
    }
    if let Some(n) = args.train_count {
        config.data.train_count = n;
    }
    if let Some(n) = args.val_count {
        config.data.val_count = n;
    }
    if let Some(n) = args.test_count {
        config.data.test_count = n;
    }
    config.validate()?;

    let splits: Vec<&str> = if args.splits.is_empty() {
        SPLITS.to_vec()
    } else {
        for s in &args.splits {
            if !SPLITS.contains(&s.as_str()) {
                return Err(Failure::new(
                    EXIT_CONFIG,
                    format!("unknown split {s:?}; expected one of {SPLITS:?}"),
                ));
            }
        }
        args.splits.iter().map(|s| s.as_str()).collect()
    };

    let dir = config.data.dir.clone();
    write_resolved_config(&dir, &config)?;

    for split in splits {
        let count = config.data.count_for(split).expect("known split");
        let manifest = generate_split(&dir, split, &config.generation, count, true)?;
        println!(
            "split {split}: {count} examples of {} samples written to {}",
            config.generation.n_samples,
            dir.display()
        );

        let mut class_counts: BTreeMap<u8, usize> = BTreeMap::new();
        let mut snr_counts: BTreeMap<i64, usize> = BTreeMap::new();
        for rec in &manifest.records {
            for em in &rec.emitters {
                *class_counts.entry(em.class.value()).or_default() += 1;
            }
            *snr_counts.entry((rec.snr_db as f64 * 2.0).round() as i64).or_default() += 1;
        }
        for class in WaveformClass::ALL {
            let n = class_counts.get(&class.value()).copied().unwrap_or(0);
            println!("  class {:<18} {n} emitters", format!("{class:?}"));
        }
        // Fold the half-dB grid into 5 dB groups so the histogram stays
        // readable at full range.
        let mut grouped: BTreeMap<i64, usize> = BTreeMap::new();
        for (key, n) in &snr_counts {
            let snr = *key as f64 / 2.0;
            *grouped.entry((snr / 5.0).floor() as i64).or_default() += n;
        }
        for (g, n) in grouped {
            println!(
                "  snr [{:>6.1}, {:>6.1}) dB   {n} examples",
                5.0 * g as f64,
                5.0 * (g + 1) as f64
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn apply_train_overrides(config: &mut RunConfig, args: &TrainArgs) -> Result<(), Failure> {
    if let Some(dir) = &args.data {
        config.data.dir = dir.clone();
    }
    if let Some(kind) = &args.model {
        config.model = match kind.as_str() {
            "unet" => ArchConfig::Unet {
                config: UNetConfig::default(),
                stages: config.model.stages(),
                stage_input: StageInput::default(),
            },
            "tcn" => ArchConfig::Tcn {
                config: TcnConfig::default(),
                stages: config.model.stages(),
                stage_input: StageInput::default(),
            },
            other => {
                return Err(Failure::new(
                    EXIT_CONFIG,
                    format!("unknown model {other:?}; expected unet or tcn"),
                ))
            }
        };
    }
    if args.stages.is_some() || args.stage_input.is_some() {
        let stages = args.stages.unwrap_or(config.model.stages());
        let stage_input = match args.stage_input.as_deref() {
            None => None,
            Some("probabilities") => Some(StageInput::Probabilities),
            Some("logits") => Some(StageInput::Logits),
            Some(other) => {
                return Err(Failure::new(
                    EXIT_CONFIG,
                    format!("unknown stage input {other:?}; expected probabilities or logits"),
                ))
            }
        };
        config.model = match config.model.clone() {
            ArchConfig::Unet {
                config: c,
                stage_input: si,
                ..
            } => ArchConfig::Unet {
                config: c,
                stages,
                stage_input: stage_input.unwrap_or(si),
            },
            ArchConfig::Tcn {
                config: c,
                stage_input: si,
                ..
            } => ArchConfig::Tcn {
                config: c,
                stages,
                stage_input: stage_input.unwrap_or(si),
            },
        };
    }
    if let Some(v) = args.epochs {
        config.train.epochs = v;
    }
    if let Some(v) = args.lr {
        config.train.lr = v;
    }
    if let Some(v) = args.batch_size {
        config.train.batch_size = v;
    }
    if let Some(v) = args.window {
        config.train.window = v;
    }
    if let Some(v) = args.seed {
        config.train.seed = v;
    }
    Ok(())
}

fn cmd_train(args: TrainArgs) -> Result<ExitCode, Failure> {
    let mut config = load_run_config(args.config.as_deref())?;
    apply_train_overrides(&mut config, &args)?;
    config.validate()?;

    let dataset = Dataset::open(&config.data.dir, "train")?;
    let normalizer = dataset.normalizer().ok_or_else(|| {
        Failure::new(
            EXIT_INCOMPATIBLE,
            "train split carries no normaliser statistics; regenerate the dataset",
        )
    })?;
    let examples = dataset.load_all()?;
    let val_examples = match Dataset::open(&config.data.dir, "val") {
        Ok(val) => Some(val.load_all()?),
        Err(_) => None,
    };

    let mut session = match &args.resume {
        Some(path) => {
            let checkpoint = load_checkpoint(path)?;
            let session = TrainSession::resume(&checkpoint, &config.train)?;
            // The checkpoint's architecture wins over the config so a
            // resume cannot silently reshape the model.
            config.model = session.arch.clone();
            println!(
                "resumed {} at epoch {}",
                session.arch.describe(),
                session.epochs_completed()
            );
            session
        }
        None => TrainSession::new(&config.model, &config.train, &normalizer)?,
    };
    config.validate()?;
    write_resolved_config(&args.out, &config)?;

    println!(
        "training {} on {} examples ({} epochs, window {}, batch {})",
        session.arch.describe(),
        examples.len(),
        config.train.epochs,
        config.train.window,
        config.train.batch_size
    );

    let mut history = Vec::new();
    let mut best_val = f64::INFINITY;
    let final_path = args.out.join("final.ckpt");
    let best_path = args.out.join("best.ckpt");

    while session.epochs_completed() < config.train.epochs {
        let epoch = session.epochs_completed();
        let mean_loss = match session.run_one_epoch(&examples, &mut history) {
            Ok(l) => l,
            Err(TrainError::NanLoss {
                epoch,
                step,
                stage_losses,
            }) => {
                let dump = serde_json::json!({
                    "epoch": epoch,
                    "step": step,
                    "stage_losses": stage_losses,
                });
                std::fs::create_dir_all(&args.out)?;
                std::fs::write(
                    args.out.join("nan-diagnostic.json"),
                    serde_json::to_string_pretty(&dump).expect("diagnostic serialises"),
                )?;
                write_history(&args.out, &history)?;
                return Err(TrainError::NanLoss {
                    epoch,
                    step,
                    stage_losses,
                }
                .into());
            }
            Err(e) => return Err(e.into()),
        };

        let val_loss = match &val_examples {
            Some(val) => Some(session.validation_loss(val)?),
            None => None,
        };
        let improved = val_loss.map(|v| v < best_val).unwrap_or(false);
        if let Some(v) = val_loss {
            if improved {
                best_val = v;
                session.snapshot().save(&best_path)?;
            }
            println!(
                "epoch {:>4}/{}  train loss {mean_loss:.6}  val loss {v:.6}{}",
                epoch + 1,
                config.train.epochs,
                if improved { "  (best)" } else { "" }
            );
        } else {
            println!(
                "epoch {:>4}/{}  train loss {mean_loss:.6}",
                epoch + 1,
                config.train.epochs
            );
        }

        let every = config.train.checkpoint_every;
        if every > 0 && (epoch + 1) % every == 0 {
            session
                .snapshot()
                .save(&args.out.join(format!("epoch-{:04}.ckpt", epoch + 1)))?;
        }
    }

    session.snapshot().save(&final_path)?;
    if best_val.is_infinite() {
        // No val split: the final model doubles as the best one.
        session.snapshot().save(&best_path)?;
    }
    write_history(&args.out, &history)?;
    println!(
        "saved {} and {} ({} history rows)",
        final_path.display(),
        best_path.display(),
        history.len()
    );
    Ok(ExitCode::SUCCESS)
}

fn write_history(out: &Path, history: &[radseg::train::HistoryRow]) -> Result<(), Failure> {
    let mut csv = String::from("epoch,step,loss\n");
    for row in history {
        csv.push_str(&format!("{},{},{}\n", row.epoch, row.step, row.loss));
    }
    std::fs::write(out.join("history.csv"), csv)?;
    Ok(())
}

fn slugify(name: &str) -> String {
    let mut slug: String = name
        .to_lowercase()
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '-' })
        .collect();
    while slug.contains("--") {
        slug = slug.replace("--", "-");
    }
    slug.trim_matches('-').to_string()
}

fn cmd_eval(args: EvalArgs) -> Result<ExitCode, Failure> {
    let mut config = load_run_config(args.config.as_deref())?;
    if let Some(dir) = &args.data {
        config.data.dir = dir.clone();
    }
    if let Some(w) = args.window {
        config.eval.window = w;
    }
    if let Some(t) = args.threshold {
        config.eval.threshold = t;
    }

    let baseline = match (&args.baseline, args.oracle) {
        (Some(_), true) => {
            return Err(Failure::new(
                EXIT_CONFIG,
                "--oracle and --baseline are mutually exclusive",
            ))
        }
        (None, true) => Some(Baseline::Oracle),
        (None, false) => None,
        (Some(name), false) => Some(match name.as_str() {
            "oracle" => Baseline::Oracle,
            "all-zero" => Baseline::AllZero,
            "energy" => Baseline::Energy,
            other => {
                return Err(Failure::new(
                    EXIT_CONFIG,
                    format!("unknown baseline {other:?}; expected oracle, all-zero, or energy"),
                ))
            }
        }),
    };
    if baseline.is_some() && args.checkpoint.is_some() {
        return Err(Failure::new(
            EXIT_CONFIG,
            "--checkpoint and --baseline are mutually exclusive",
        ));
    }

    let dataset = Dataset::open(&config.data.dir, &args.split)?;

    let report = match baseline {
        Some(b) => evaluate_baseline(b, &dataset, &config.eval)?,
        None => {
            let path = args.checkpoint.as_ref().ok_or_else(|| {
                Failure::new(EXIT_CONFIG, "pass --checkpoint or pick a --baseline")
            })?;
            let checkpoint = load_checkpoint(path)?;
            config.model = checkpoint.arch.clone();
            let model = checkpoint.build_model()?;
            let normalizer = checkpoint
                .meta
                .normalizer
                .or_else(|| dataset.normalizer())
                .ok_or(EvalError::MissingNormalizer)?;
            // Stage count is annotated by the report renderer, so the
            // default name carries only the backbone identity.
            let name = args
                .name
                .clone()
                .unwrap_or_else(|| checkpoint.arch.describe_backbone());
            evaluate_model(&name, &model, &normalizer, &dataset, &config.eval)?
        }
    };
    let report = match &args.name {
        Some(name) => EvalReport {
            model: name.clone(),
            ..report
        },
        None => report,
    };
    config.validate()?;
    write_resolved_config(&args.out, &config)?;

    let slug = slugify(&report.model);
    let json_path = args.out.join(format!("report-{slug}.json"));
    std::fs::write(
        &json_path,
        serde_json::to_string_pretty(&report).expect("report serialises"),
    )?;
    std::fs::write(
        args.out.join(format!("metrics-{slug}.csv")),
        write_metrics_csv(std::slice::from_ref(&report)),
    )?;

    let reports = [report];
    let bins = match &args.summary_bins {
        Some(spec) => parse_bins(spec)?,
        None => default_summary_bins(&reports),
    };
    let table = render_text_table(&reports, &bins)?;
    print!("{table}");
    std::fs::write(args.out.join(format!("summary-{slug}.txt")), &table)?;
    println!("report written to {}", json_path.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_report(args: ReportArgs) -> Result<ExitCode, Failure> {
    let mut reports = Vec::new();
    for path in &args.reports {
        let text = std::fs::read_to_string(path)?;
        let report: EvalReport = serde_json::from_str(&text).map_err(|e| {
            Failure::new(
                EXIT_IO,
                format!("{} is not an evaluation report: {e}", path.display()),
            )
        })?;
        reports.push(report);
    }

    std::fs::create_dir_all(&args.out)?;
    std::fs::write(args.out.join("combined.csv"), write_metrics_csv(&reports))?;
    for metric in Metric::ALL {
        let svg = render_svg_chart(&reports, metric)?;
        std::fs::write(args.out.join(format!("{}.svg", metric.key())), svg)?;
    }

    let bins = match &args.summary_bins {
        Some(spec) => parse_bins(spec)?,
        None => default_summary_bins(&reports),
    };
    let table = render_text_table(&reports, &bins)?;
    print!("{table}");
    std::fs::write(args.out.join("summary.txt"), &table)?;
    println!(
        "merged {} reports into {}",
        reports.len(),
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_inspect(args: InspectArgs) -> Result<ExitCode, Failure> {
    let mut config = load_run_config(args.config.as_deref())?;
    if let Some(dir) = &args.data {
        config.data.dir = dir.clone();
    }
    if let Some(w) = args.window {
        config.eval.window = w;
    }

    let dataset = Dataset::open(&config.data.dir, &args.split)?;
    let ex = dataset.read_example(args.index)?;

    let prediction = match &args.checkpoint {
        Some(path) => {
            let checkpoint = load_checkpoint(path)?;
            let model = checkpoint.build_model()?;
            let normalizer = checkpoint
                .meta
                .normalizer
                .or_else(|| dataset.normalizer())
                .ok_or(EvalError::MissingNormalizer)?;
            Some(predict_mask(&model, &normalizer, &ex, &config.eval)?)
        }
        None => None,
    };

    std::fs::create_dir_all(&args.out)?;
    write_resolved_config(&args.out, &config)?;

    let channels = ex.mask.channels();
    println!(
        "example {} of split {:?}: snr {} dB, {} emitters, {} samples",
        args.index,
        args.split,
        ex.snr_db,
        ex.emitters.len(),
        ex.iq.len()
    );
    for em in &ex.emitters {
        println!(
            "  {:<18} pw {:>7.2} us  pri {:>8.2} us  toa {:>8.2} us  pulses {}",
            format!("{:?}", em.class),
            em.pw_us,
            em.pri_us,
            em.toa_us,
            em.n_pulses
        );
    }
    for c in 0..channels {
        let truth = ex.mask.count_ones(c);
        match &prediction {
            Some(pred) => {
                let (mut tp, mut tn, mut fp, mut fn_) = (0usize, 0usize, 0usize, 0usize);
                for l in 0..ex.mask.len() {
                    match (pred.get(c, l), ex.mask.get(c, l)) {
                        (true, true) => tp += 1,
                        (false, false) => tn += 1,
                        (true, false) => fp += 1,
                        (false, true) => fn_ += 1,
                    }
                }
                println!(
                    "  channel {c}: truth {truth}  tp {tp}  tn {tn}  fp {fp}  fn {fn_}"
                );
            }
            None => println!("  channel {c}: truth {truth}"),
        }
    }

    let meta = serde_json::json!({
        "index": ex.index,
        "split": args.split,
        "snr_db": ex.snr_db,
        "n_samples": ex.iq.len(),
        "emitters": ex.emitters,
    });
    std::fs::write(
        args.out.join(format!("example-{}.json", args.index)),
        serde_json::to_string_pretty(&meta).expect("meta serialises"),
    )?;

    // Per-sample dump: IQ, truth bits, and (with a checkpoint) predicted
    // bits plus an outcome label per channel. The four labels partition
    // every (channel, sample) cell.
    let mut csv = String::from("sample,i,q");
    for c in 0..channels {
        csv.push_str(&format!(",gt{c}"));
    }
    if prediction.is_some() {
        for c in 0..channels {
            csv.push_str(&format!(",pred{c}"));
        }
        for c in 0..channels {
            csv.push_str(&format!(",label{c}"));
        }
    }
    csv.push('\n');
    for l in 0..ex.iq.len() {
        csv.push_str(&format!("{l},{},{}", ex.iq.i[l], ex.iq.q[l]));
        for c in 0..channels {
            csv.push_str(if ex.mask.get(c, l) { ",1" } else { ",0" });
        }
        if let Some(pred) = &prediction {
            for c in 0..channels {
                csv.push_str(if pred.get(c, l) { ",1" } else { ",0" });
            }
            for c in 0..channels {
                let label = match (pred.get(c, l), ex.mask.get(c, l)) {
                    (true, true) => "TP",
                    (false, false) => "TN",
                    (true, false) => "FP",
                    (false, true) => "FN",
                };
                csv.push(',');
                csv.push_str(label);
            }
        }
        csv.push('\n');
    }
    let csv_path = args.out.join(format!("example-{}.csv", args.index));
    std::fs::write(&csv_path, csv)?;
    println!("sample dump written to {}", csv_path.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_gradcheck(args: GradcheckArgs) -> Result<ExitCode, Failure> {
    if args.seeds == 0 {
        return Err(Failure::new(EXIT_CONFIG, "--seeds must be at least 1"));
    }
    let reports = run_suite(args.seeds);
    let mut all_pass = true;
    println!(
        "{:<18} {:>6} {:>14} {:>10}  verdict",
        "case", "cases", "max rel err", "tolerance"
    );
    for report in &reports {
        let ok = report.pass();
        all_pass &= ok;
        println!(
            "{:<18} {:>6} {:>14.3e} {:>10.1e}  {}",
            report.name,
            report.cases,
            report.max_rel_err,
            report.tolerance,
            if ok { "PASS" } else { "FAIL" }
        );
    }
    if all_pass {
        println!("all {} gradient cases pass", reports.len());
        Ok(ExitCode::SUCCESS)
    } else {
        Err(Failure::new(1, "gradient check failed"))
    }
}
