//! `medaug`: deterministic augmentation, balancing, mixup, and scoring for
//! image datasets, one subcommand per pipeline stage.
//!
//! Exit codes: 0 on full success, 1 on runtime or partial failure (some
//! records failed), 2 on invalid arguments. Logs go to standard error;
//! results (dice report, stats) go to standard output.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use medaug_core::dataset::{
    collect_stats, expand_segmentation_set, mixup_directories, run_balance, TaskKind, TransformId,
    DEFAULT_OP_ROSTER,
};
use medaug_core::geometric::{self, GeometricParams};
use medaug_core::metrics::{binarize_prediction, mean_dice, EvalPair};
use medaug_core::mixup::MixupMode;
use medaug_core::photometric::{self, PhotometricParams};
use medaug_core::png;
use medaug_core::rng::RngStream;

#[derive(Parser)]
#[command(name = "medaug", version, about = "Deterministic image augmentation toolkit")]
struct Cli {
    /// Master seed for every randomized operation.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,

    /// Worker threads (default: all available cores).
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    workers: Option<u32>,

    /// Log errors only.
    #[arg(long, global = true, conflicts_with = "verbose")]
    quiet: bool,

    /// Log per-record progress.
    #[arg(long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Apply one transform to a single image file.
    Apply(ApplyArgs),
    /// Balance a classification tree by augmenting undersized classes.
    Balance(BalanceArgs),
    /// Expand a segmentation training split with mixed image/mask pairs.
    ExpandSeg(ExpandSegArgs),
    /// Generate mixed image/mask pairs from two paired directories.
    Mixup(MixupArgs),
    /// Score predicted masks against ground-truth masks.
    Dice(DiceArgs),
    /// Summarize a dataset tree: counts and image dimensions.
    Stats(StatsArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OpArg {
    #[value(name = "rotate90")]
    Rotate90,
    #[value(name = "fliph")]
    FlipH,
    #[value(name = "scale")]
    Scale,
    #[value(name = "translate")]
    Translate,
    #[value(name = "shear")]
    Shear,
    #[value(name = "brightness")]
    Brightness,
    #[value(name = "contrast")]
    Contrast,
    #[value(name = "noise")]
    Noise,
    #[value(name = "histeq")]
    HistEq,
}

impl OpArg {
    fn to_transform(self) -> TransformId {
        match self {
            OpArg::Rotate90 => TransformId::Rotate90,
            OpArg::FlipH => TransformId::FlipH,
            OpArg::Scale => TransformId::Scale,
            OpArg::Translate => TransformId::Translate,
            OpArg::Shear => TransformId::Shear,
            OpArg::Brightness => TransformId::Brightness,
            OpArg::Contrast => TransformId::Contrast,
            OpArg::Noise => TransformId::Noise,
            OpArg::HistEq => TransformId::HistEq,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    #[value(name = "global")]
    Global,
    #[value(name = "composite")]
    Composite,
}

impl ModeArg {
    fn to_mode(self) -> MixupMode {
        match self {
            ModeArg::Global => MixupMode::Global,
            ModeArg::Composite => MixupMode::Composite,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskArg {
    #[value(name = "classification")]
    Classification,
    #[value(name = "segmentation")]
    Segmentation,
}

fn parse_positive(raw: &str) -> Result<f64, String> {
    let value: f64 = raw.parse().map_err(|_| format!("not a number: {raw}"))?;
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(format!("must be a positive finite number, got {raw}"))
    }
}

fn parse_nonnegative(raw: &str) -> Result<f64, String> {
    let value: f64 = raw.parse().map_err(|_| format!("not a number: {raw}"))?;
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(format!("must be a non-negative finite number, got {raw}"))
    }
}

fn parse_finite(raw: &str) -> Result<f64, String> {
    let value: f64 = raw.parse().map_err(|_| format!("not a number: {raw}"))?;
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("must be a finite number, got {raw}"))
    }
}

fn parse_alpha(raw: &str) -> Result<f64, String> {
    let value: f64 = raw.parse().map_err(|_| format!("not a number: {raw}"))?;
    if value.is_finite() && value > 0.0 && value <= 1.0 {
        Ok(value)
    } else {
        Err(format!("alpha must lie in (0, 1], got {raw}"))
    }
}

#[derive(Args)]
struct ApplyArgs {
    /// Transform to apply.
    #[arg(long, value_enum)]
    op: OpArg,

    /// Input image file.
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,

    /// Output image file.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,

    /// Scale or contrast factor (defaults: 1.2 for scale, 1.5 for contrast).
    #[arg(long, value_parser = parse_positive)]
    factor: Option<f64>,

    /// Horizontal shift in pixels; positive moves content right.
    #[arg(long, default_value_t = 20, allow_hyphen_values = true)]
    dx: i32,

    /// Vertical shift in pixels; positive moves content down.
    #[arg(long, default_value_t = 30, allow_hyphen_values = true)]
    dy: i32,

    /// Horizontal shear coefficient.
    #[arg(long, default_value_t = 0.2, value_parser = parse_finite, allow_hyphen_values = true)]
    k: f64,

    /// Fill value for pixels shifted in from outside the frame.
    #[arg(long, default_value_t = 0)]
    fill: u8,

    /// Brightness shift on the 0-255 scale.
    #[arg(long, default_value_t = 40, allow_hyphen_values = true)]
    delta: i32,

    /// Gaussian noise standard deviation on the 0-255 scale.
    #[arg(long, default_value_t = 10.0, value_parser = parse_nonnegative)]
    sigma: f64,

    /// Gaussian noise mean.
    #[arg(long, default_value_t = 0.0, value_parser = parse_finite, allow_hyphen_values = true)]
    mean: f64,
}

#[derive(Args)]
struct BalanceArgs {
    /// Classification tree: one subdirectory per class.
    #[arg(long, value_name = "DIR")]
    input: PathBuf,

    /// Output tree; originals are copied in, augmentations added.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,

    /// Target item count per class.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    target: u64,

    /// Comma-separated transform roster cycled over augmented copies.
    #[arg(long, value_enum, value_delimiter = ',', num_args = 1..)]
    ops: Option<Vec<OpArg>>,
}

#[derive(Args)]
struct ExpandSegArgs {
    /// Segmentation tree: {train,test}/{images,masks} with stem-paired masks.
    #[arg(long, value_name = "DIR")]
    root: PathBuf,

    /// Output tree; both splits are copied in, mixes added to train.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,

    /// How many mixed pairs to generate.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    count: u64,

    /// Beta distribution shape for the mixing weight.
    #[arg(long, default_value_t = 0.4, value_parser = parse_alpha)]
    alpha: f64,

    /// Whole-image blending or mask-bounded compositing.
    #[arg(long, value_enum, default_value_t = ModeArg::Global)]
    mode: ModeArg,
}

#[derive(Args)]
struct MixupArgs {
    /// Directory of source images.
    #[arg(long, value_name = "DIR")]
    images: PathBuf,

    /// Directory of masks paired to the images by file stem.
    #[arg(long, value_name = "DIR")]
    masks: PathBuf,

    /// Output root; receives images/ and masks/ with only generated pairs.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,

    /// How many mixed pairs to generate.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    count: u64,

    /// Beta distribution shape for the mixing weight.
    #[arg(long, default_value_t = 0.4, value_parser = parse_alpha)]
    alpha: f64,

    /// Whole-image blending or mask-bounded compositing.
    #[arg(long, value_enum, default_value_t = ModeArg::Global)]
    mode: ModeArg,
}

#[derive(Args)]
struct DiceArgs {
    /// Directory of predicted masks (grayscale score maps accepted).
    #[arg(long, value_name = "DIR")]
    pred: PathBuf,

    /// Directory of ground-truth masks, matched to predictions by basename.
    #[arg(long, value_name = "DIR")]
    truth: PathBuf,

    /// Prediction values at or above this become foreground.
    #[arg(long, default_value_t = 128)]
    threshold: u8,

    /// Also write the report as JSON to this path.
    #[arg(long, value_name = "FILE")]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    /// Dataset root to summarize.
    #[arg(long, value_name = "DIR")]
    input: PathBuf,

    /// Layout to scan the root as.
    #[arg(long, value_enum)]
    task: TaskArg,
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let level = if cli.quiet {
        log::LevelFilter::Error
    } else if cli.verbose {
        log::LevelFilter::Debug
    } else {
        log::LevelFilter::Info
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .format_target(false)
        .init();

    if let Some(workers) = cli.workers {
        if let Err(err) = rayon::ThreadPoolBuilder::new()
            .num_threads(workers as usize)
            .build_global()
        {
            log::error!("could not size the worker pool: {err}");
            return ExitCode::from(1);
        }
    }

    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            log::error!("{err:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<u8> {
    match &cli.command {
        Command::Apply(args) => run_apply(args, cli.seed),
        Command::Balance(args) => run_balance_cmd(args, cli.seed),
        Command::ExpandSeg(args) => run_expand_seg(args, cli.seed),
        Command::Mixup(args) => run_mixup(args, cli.seed),
        Command::Dice(args) => run_dice(args),
        Command::Stats(args) => run_stats(args),
    }
}

fn run_apply(args: &ApplyArgs, seed: u64) -> anyhow::Result<u8> {
    let image = png::read_image(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let transformed = match args.op {
        OpArg::Rotate90 => geometric::rotate90_cw(&image),
        OpArg::FlipH => geometric::flip_horizontal(&image),
        OpArg::Scale => geometric::scale(&image, args.factor.unwrap_or(1.2))?,
        OpArg::Translate => geometric::translate(&image, args.dx, args.dy, args.fill),
        OpArg::Shear => geometric::shear_horizontal(&image, args.k, args.fill),
        OpArg::Brightness => photometric::adjust_brightness(&image, args.delta),
        OpArg::Contrast => photometric::adjust_contrast(&image, args.factor.unwrap_or(1.5))?,
        OpArg::Noise => {
            log::info!("seed: {seed}");
            let mut stream = RngStream::derive(seed, 0);
            photometric::add_gaussian_noise(&image, &mut stream, args.mean, args.sigma)?
        }
        OpArg::HistEq => photometric::equalize_histogram_luma(&image),
    };
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
    }
    png::write_image(&args.out, &transformed)
        .with_context(|| format!("writing {}", args.out.display()))?;
    log::info!(
        "{} -> {} ({}x{})",
        args.input.display(),
        args.out.display(),
        transformed.width(),
        transformed.height()
    );
    Ok(0)
}

fn run_balance_cmd(args: &BalanceArgs, seed: u64) -> anyhow::Result<u8> {
    log::info!("seed: {seed}");
    let roster: Vec<TransformId> = match &args.ops {
        Some(ops) => ops.iter().map(|op| op.to_transform()).collect(),
        None => DEFAULT_OP_ROSTER.to_vec(),
    };
    let report = run_balance(
        &args.input,
        &args.out,
        args.target,
        &roster,
        seed,
        &GeometricParams::default(),
        &PhotometricParams::default(),
    )?;
    for (label, count) in &report.class_counts_before {
        log::info!("class {label}: {count} -> {}", args.target);
    }
    for outcome in &report.execution.outcomes {
        match &outcome.error {
            Some(err) => log::error!("{}: {err}", outcome.output.display()),
            None => log::debug!("wrote {}", outcome.output.display()),
        }
    }
    let failures = report.execution.failures();
    log::info!(
        "copied {} originals, wrote {} augmentations, {} failed",
        report.originals_copied,
        report.execution.successes(),
        failures
    );
    Ok(if failures > 0 { 1 } else { 0 })
}

fn run_expand_seg(args: &ExpandSegArgs, seed: u64) -> anyhow::Result<u8> {
    log::info!("seed: {seed}");
    let report = expand_segmentation_set(
        &args.root,
        &args.out,
        args.count,
        args.alpha,
        args.mode.to_mode(),
        seed,
    )?;
    log::info!(
        "train: {} originals + {} mixed pairs; test: {} pairs untouched",
        report.train_pairs,
        report.generated,
        report.test_pairs
    );
    Ok(0)
}

fn run_mixup(args: &MixupArgs, seed: u64) -> anyhow::Result<u8> {
    log::info!("seed: {seed}");
    let report = mixup_directories(
        &args.images,
        &args.masks,
        &args.out,
        args.count,
        args.alpha,
        args.mode.to_mode(),
        seed,
    )?;
    log::info!(
        "generated {} mixed pairs from {} sources",
        report.generated,
        report.source_pairs
    );
    Ok(0)
}

/// PNG/JPEG files directly under `dir`, keyed by file name.
fn mask_files_by_name(dir: &Path) -> anyhow::Result<BTreeMap<OsString, PathBuf>> {
    let mut files = BTreeMap::new();
    let entries =
        fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))?;
    for entry in entries {
        let path = entry
            .with_context(|| format!("listing {}", dir.display()))?
            .path();
        let is_image = matches!(
            path.extension().and_then(|e| e.to_str()),
            Some(ext) if ext.eq_ignore_ascii_case("png")
                || ext.eq_ignore_ascii_case("jpg")
                || ext.eq_ignore_ascii_case("jpeg")
        );
        if path.is_file() && is_image {
            files.insert(path.file_name().expect("listed files are named").into(), path);
        }
    }
    Ok(files)
}

fn run_dice(args: &DiceArgs) -> anyhow::Result<u8> {
    let predictions = mask_files_by_name(&args.pred)?;
    let mut truths = mask_files_by_name(&args.truth)?;
    anyhow::ensure!(
        !predictions.is_empty(),
        "no mask files found under {}",
        args.pred.display()
    );

    let mut pairs = Vec::with_capacity(predictions.len());
    for (name, pred_path) in &predictions {
        let truth_path = truths.remove(name).with_context(|| {
            format!("no ground-truth mask named {}", Path::new(name).display())
        })?;
        let scores = png::read_image(pred_path)
            .with_context(|| format!("reading {}", pred_path.display()))?;
        let prediction = binarize_prediction(&scores, args.threshold)?;
        let truth = png::read_mask(&truth_path)
            .with_context(|| format!("reading {}", truth_path.display()))?;
        pairs.push(EvalPair {
            id: name.to_string_lossy().into_owned(),
            prediction,
            truth,
        });
    }
    if let Some((name, _)) = truths.into_iter().next() {
        anyhow::bail!("no prediction named {}", Path::new(&name).display());
    }

    let report = mean_dice(&pairs)?;
    for item in &report.items {
        println!("{} {:.6}", item.id, item.dice);
    }
    println!("mean_dice={:.6}", report.mean_dice);

    if let Some(json_path) = &args.json {
        let rendered = serde_json::to_string_pretty(&report)?;
        fs::write(json_path, rendered)
            .with_context(|| format!("writing {}", json_path.display()))?;
    }
    Ok(0)
}

fn run_stats(args: &StatsArgs) -> anyhow::Result<u8> {
    let task = match args.task {
        TaskArg::Classification => TaskKind::Classification,
        TaskArg::Segmentation => TaskKind::Segmentation,
    };
    let stats = collect_stats(&args.input, task)?;
    let task_name = match stats.task {
        TaskKind::Classification => "classification",
        TaskKind::Segmentation => "segmentation",
    };
    println!("task: {task_name}");
    println!("total items: {}", stats.total_items);
    for (group, count) in &stats.group_counts {
        println!("  {group}: {count}");
    }
    println!("dimensions:");
    for ((width, height), count) in &stats.dimension_histogram {
        println!("  {width}x{height}: {count}");
    }
    Ok(0)
}
