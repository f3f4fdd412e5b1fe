//! Materializes plans and mixup batches into output trees.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::manifest::{file_stem_string, image_files};
use super::{
    plan_balancing, scan_dataset, AugmentationPlan, DatasetManifest, PipelineError, PlanRecord,
    Split, TaskKind, TransformId,
};
use crate::geometric::{self, GeometricParams};
use crate::mixup::{generate_mixup_set, MixupError, MixupMode, MixupResult};
use crate::photometric::{self, PhotometricParams};
use crate::png;
use crate::raster::{ImageBuffer, SamplePair};
use crate::rng::RngStream;

/// What happened to one plan record.
#[derive(Debug, Clone)]
pub struct RecordOutcome {
    pub output: PathBuf,
    /// `None` on success, otherwise the failure rendered as text.
    pub error: Option<String>,
}

/// Per-record results of running a plan, in record order.
#[derive(Debug, Clone, Default)]
pub struct ExecutionReport {
    pub outcomes: Vec<RecordOutcome>,
}

impl ExecutionReport {
    pub fn successes(&self) -> usize {
        self.outcomes.iter().filter(|o| o.error.is_none()).count()
    }

    pub fn failures(&self) -> usize {
        self.outcomes.len() - self.successes()
    }
}

/// Summary of one balancing run.
#[derive(Debug, Clone)]
pub struct BalanceReport {
    pub class_counts_before: BTreeMap<String, u64>,
    pub originals_copied: usize,
    pub plan: AugmentationPlan,
    pub execution: ExecutionReport,
}

/// Summary of one segmentation-expansion run.
#[derive(Debug, Clone)]
pub struct ExpandReport {
    pub train_pairs: usize,
    pub test_pairs: usize,
    pub generated: usize,
}

/// Summary of one standalone mixup run.
#[derive(Debug, Clone)]
pub struct MixupDirReport {
    pub source_pairs: usize,
    pub generated: usize,
}

/// Rejects an output root that equals, contains, or sits inside `input_root`.
fn ensure_disjoint_trees(input_root: &Path, out_root: &Path) -> Result<(), PipelineError> {
    fs::create_dir_all(out_root).map_err(|e| PipelineError::io(out_root, e))?;
    let input = fs::canonicalize(input_root).map_err(|e| PipelineError::io(input_root, e))?;
    let output = fs::canonicalize(out_root).map_err(|e| PipelineError::io(out_root, e))?;
    if input.starts_with(&output) || output.starts_with(&input) {
        return Err(PipelineError::OutputOverlapsInput(out_root.to_path_buf()));
    }
    Ok(())
}

fn transformed_image(
    record: &PlanRecord,
    master_seed: u64,
    geometry: &GeometricParams,
    photometry: &PhotometricParams,
) -> Result<ImageBuffer, PipelineError> {
    let image = png::read_image(&record.source)?;
    let out = match record.op {
        TransformId::Rotate90 => geometric::rotate90_cw(&image),
        TransformId::FlipH => geometric::flip_horizontal(&image),
        TransformId::Scale => {
            let scaled = geometric::scale(&image, geometry.scale_factor)?;
            // An upscale is cropped back so the output keeps the source
            // frame; a downscale has nothing to crop and stays smaller.
            if scaled.width() >= image.width() && scaled.height() >= image.height() {
                geometric::crop_center(&scaled, image.width(), image.height())?
            } else {
                scaled
            }
        }
        TransformId::Translate => geometric::translate(
            &image,
            geometry.translate_dx,
            geometry.translate_dy,
            geometry.fill_value,
        ),
        TransformId::Shear => {
            geometric::shear_horizontal(&image, geometry.shear_k, geometry.fill_value)
        }
        TransformId::Brightness => {
            photometric::adjust_brightness(&image, photometry.brightness_delta)
        }
        TransformId::Contrast => photometric::adjust_contrast(&image, photometry.contrast_factor)?,
        TransformId::Noise => {
            let mut stream = RngStream::derive(master_seed, record.stream_index);
            photometric::add_gaussian_noise(
                &image,
                &mut stream,
                photometry.noise_mean,
                photometry.noise_sigma,
            )?
        }
        TransformId::HistEq => photometric::equalize_histogram_luma(&image),
    };
    Ok(out)
}

/// Runs every record of `plan` in parallel, capturing failures per record.
///
/// Output parent directories are created up front and a failure there aborts
/// the whole run; a failure inside one record (unreadable source, invalid
/// parameter, write error) only marks that record's outcome. Outcomes come
/// back in record order regardless of scheduling.
pub fn execute_plan(
    plan: &AugmentationPlan,
    geometry: &GeometricParams,
    photometry: &PhotometricParams,
) -> Result<ExecutionReport, PipelineError> {
    let mut parents = BTreeSet::new();
    for record in &plan.records {
        if let Some(parent) = record.output.parent() {
            parents.insert(parent.to_path_buf());
        }
    }
    for parent in parents {
        fs::create_dir_all(&parent).map_err(|e| PipelineError::io(&parent, e))?;
    }
    let outcomes = plan
        .records
        .par_iter()
        .map(|record| {
            let result = transformed_image(record, plan.master_seed, geometry, photometry)
                .and_then(|image| Ok(png::write_image(&record.output, &image)?));
            RecordOutcome {
                output: record.output.clone(),
                error: result.err().map(|e| e.to_string()),
            }
        })
        .collect();
    Ok(ExecutionReport { outcomes })
}

/// Scans `input_root`, plans the lift to `target_per_class`, copies every
/// original bytewise into `out_root/{label}/`, then runs the plan.
///
/// Sources are never modified; the output tree must not overlap the input
/// tree. Originals keep their exact source bytes while augmented files are
/// freshly encoded.
pub fn run_balance(
    input_root: &Path,
    out_root: &Path,
    target_per_class: u64,
    roster: &[TransformId],
    master_seed: u64,
    geometry: &GeometricParams,
    photometry: &PhotometricParams,
) -> Result<BalanceReport, PipelineError> {
    let manifest = scan_dataset(input_root, TaskKind::Classification)?;
    ensure_disjoint_trees(input_root, out_root)?;
    let plan = plan_balancing(
        &manifest,
        target_per_class,
        roster,
        master_seed,
        false,
        out_root,
    )?;

    let planned_outputs: BTreeSet<&Path> =
        plan.records.iter().map(|r| r.output.as_path()).collect();
    let no_items = Vec::new();
    let items = match &manifest {
        DatasetManifest::Classification { items } => items,
        DatasetManifest::Segmentation { .. } => &no_items,
    };
    let mut originals_copied = 0usize;
    for item in items {
        let dest_dir = out_root.join(&item.label);
        fs::create_dir_all(&dest_dir).map_err(|e| PipelineError::io(&dest_dir, e))?;
        let dest = dest_dir.join(item.path.file_name().expect("scanned paths name files"));
        if planned_outputs.contains(dest.as_path()) {
            return Err(PipelineError::DuplicateOutput(dest));
        }
        fs::copy(&item.path, &dest).map_err(|e| PipelineError::io(&dest, e))?;
        originals_copied += 1;
    }

    let execution = execute_plan(&plan, geometry, photometry)?;
    Ok(BalanceReport {
        class_counts_before: manifest.class_counts(),
        originals_copied,
        plan,
        execution,
    })
}

fn mix_file_name(k: usize, sources: (usize, usize)) -> String {
    format!("mix_{k:04}_{}_{}.png", sources.0, sources.1)
}

fn write_mixup_results(results: &[MixupResult], dir: &Path) -> Result<(), PipelineError> {
    for (k, result) in results.iter().enumerate() {
        let name = mix_file_name(k, result.source_ids);
        png::write_image(&dir.join("images").join(&name), &result.image)?;
        png::write_mask(&dir.join("masks").join(&name), &result.mask)?;
    }
    Ok(())
}

fn load_pair(image_path: &Path, mask_path: &Path) -> Result<SamplePair, PipelineError> {
    let image = png::read_image(image_path)?;
    let mask = png::read_mask(mask_path)?;
    Ok(SamplePair::new(image, mask).map_err(MixupError::from)?)
}

/// Grows a segmentation training split with mask-aware mixup.
///
/// Both splits of `root` are copied bytewise into `out_root` under the same
/// `{train,test}/{images,masks}` layout, then `count` mixed pairs generated
/// from the train split are written alongside the train originals as
/// `mix_{k:04}_{i}_{j}.png`, where `i` and `j` are the indices of the two
/// sources in manifest order. The test split passes through untouched.
pub fn expand_segmentation_set(
    root: &Path,
    out_root: &Path,
    count: u64,
    alpha: f64,
    mode: MixupMode,
    master_seed: u64,
) -> Result<ExpandReport, PipelineError> {
    let manifest = scan_dataset(root, TaskKind::Segmentation)?;
    ensure_disjoint_trees(root, out_root)?;
    let no_items = Vec::new();
    let items = match &manifest {
        DatasetManifest::Segmentation { items } => items,
        DatasetManifest::Classification { .. } => &no_items,
    };

    for split in [Split::Train, Split::Test] {
        for sub in ["images", "masks"] {
            let dir = out_root.join(split.dir_name()).join(sub);
            fs::create_dir_all(&dir).map_err(|e| PipelineError::io(&dir, e))?;
        }
    }

    let mut train_pairs = Vec::new();
    let mut test_count = 0usize;
    for item in items {
        let split_dir = out_root.join(item.split.dir_name());
        let image_dest = split_dir
            .join("images")
            .join(item.image.file_name().expect("scanned paths name files"));
        let mask_dest = split_dir
            .join("masks")
            .join(item.mask.file_name().expect("scanned paths name files"));
        fs::copy(&item.image, &image_dest).map_err(|e| PipelineError::io(&image_dest, e))?;
        fs::copy(&item.mask, &mask_dest).map_err(|e| PipelineError::io(&mask_dest, e))?;
        match item.split {
            Split::Train => train_pairs.push(load_pair(&item.image, &item.mask)?),
            Split::Test => test_count += 1,
        }
    }

    let results = generate_mixup_set(&train_pairs, count, alpha, mode, master_seed)?;
    write_mixup_results(&results, &out_root.join(Split::Train.dir_name()))?;

    Ok(ExpandReport {
        train_pairs: train_pairs.len(),
        test_pairs: test_count,
        generated: results.len(),
    })
}

/// Generates `count` mixed pairs from two flat directories paired by stem.
///
/// Only generated files are written: images under `out_root/images`, masks
/// under `out_root/masks`, named `mix_{k:04}_{i}_{j}.png` with `i` and `j`
/// the source indices in sorted-path order.
pub fn mixup_directories(
    images_dir: &Path,
    masks_dir: &Path,
    out_root: &Path,
    count: u64,
    alpha: f64,
    mode: MixupMode,
    master_seed: u64,
) -> Result<MixupDirReport, PipelineError> {
    let images = image_files(images_dir)?
        .ok_or_else(|| PipelineError::MissingDirectory(images_dir.to_path_buf()))?;
    let masks = image_files(masks_dir)?
        .ok_or_else(|| PipelineError::MissingDirectory(masks_dir.to_path_buf()))?;
    if images.is_empty() {
        return Err(PipelineError::MissingDirectory(images_dir.to_path_buf()));
    }
    ensure_disjoint_trees(images_dir, out_root)?;
    ensure_disjoint_trees(masks_dir, out_root)?;

    let mut masks_by_stem: BTreeMap<String, PathBuf> = BTreeMap::new();
    for mask in masks {
        masks_by_stem.insert(file_stem_string(&mask), mask);
    }
    let mut pairs = Vec::new();
    for image_path in &images {
        let mask_path = masks_by_stem
            .remove(&file_stem_string(image_path))
            .ok_or_else(|| PipelineError::UnpairedMask(image_path.clone()))?;
        pairs.push(load_pair(image_path, &mask_path)?);
    }
    if let Some((_, orphan)) = masks_by_stem.into_iter().next() {
        return Err(PipelineError::UnpairedMask(orphan));
    }

    for sub in ["images", "masks"] {
        let dir = out_root.join(sub);
        fs::create_dir_all(&dir).map_err(|e| PipelineError::io(&dir, e))?;
    }
    let results = generate_mixup_set(&pairs, count, alpha, mode, master_seed)?;
    write_mixup_results(&results, out_root)?;
    Ok(MixupDirReport {
        source_pairs: pairs.len(),
        generated: results.len(),
    })
}
