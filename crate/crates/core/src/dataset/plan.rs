//! Balancing plans: which source gets which transform, written where.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{DatasetManifest, PipelineError};

/// The transform vocabulary a balancing roster draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformId {
    Rotate90,
    FlipH,
    Scale,
    Translate,
    Shear,
    Brightness,
    Contrast,
    Noise,
    HistEq,
}

/// Default roster order used when the caller does not supply one.
pub const DEFAULT_OP_ROSTER: [TransformId; 9] = [
    TransformId::Rotate90,
    TransformId::FlipH,
    TransformId::Scale,
    TransformId::Translate,
    TransformId::Shear,
    TransformId::Brightness,
    TransformId::Contrast,
    TransformId::Noise,
    TransformId::HistEq,
];

impl TransformId {
    pub fn name(self) -> &'static str {
        match self {
            TransformId::Rotate90 => "rotate90",
            TransformId::FlipH => "fliph",
            TransformId::Scale => "scale",
            TransformId::Translate => "translate",
            TransformId::Shear => "shear",
            TransformId::Brightness => "brightness",
            TransformId::Contrast => "contrast",
            TransformId::Noise => "noise",
            TransformId::HistEq => "histeq",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        DEFAULT_OP_ROSTER.iter().copied().find(|op| op.name() == name)
    }
}

impl std::fmt::Display for TransformId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One planned augmentation: read `source`, apply `op`, write `output`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanRecord {
    pub source: PathBuf,
    pub label: String,
    pub op: TransformId,
    /// How many augmentations of this source preceded this one.
    pub occurrence: u32,
    /// Random-stream index reserved for this record; unique across the plan.
    pub stream_index: u64,
    pub output: PathBuf,
}

/// A validated set of augmentation records.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentationPlan {
    pub master_seed: u64,
    pub records: Vec<PlanRecord>,
}

/// Output name carrying full provenance: `{stem}__{op}{occurrence}.png`.
pub fn provenance_file_name(stem: &str, op: TransformId, occurrence: u32) -> String {
    format!("{stem}__{}{occurrence}.png", op.name())
}

/// Inverts [`provenance_file_name`]: `(source stem, op, occurrence)`.
pub fn parse_provenance(file_name: &str) -> Option<(String, TransformId, u32)> {
    let base = file_name.strip_suffix(".png")?;
    let split_at = base.rfind("__")?;
    let (stem, tail) = (&base[..split_at], &base[split_at + 2..]);
    let op = DEFAULT_OP_ROSTER
        .iter()
        .copied()
        .find(|op| tail.starts_with(op.name()))?;
    let occurrence: u32 = tail[op.name().len()..].parse().ok()?;
    Some((stem.to_string(), op, occurrence))
}

/// Plans the augmentations that lift every class to `target_per_class`.
///
/// For a class currently holding `c` items the deficit is `target - c`.
/// Augmentations are handed out in rounds: in round `q`, source `i` (in
/// manifest order) receives `roster[(i + q) % roster.len()]`, so per-source
/// usage never differs by more than one and the roster cycles evenly.
/// Classes already at or above the target get no records; a class above the
/// target is an error unless `force` is set, because it cannot be balanced
/// down. An already balanced dataset yields an empty plan.
///
/// `out_root` only shapes the `output` paths (`out_root/{label}/...`);
/// nothing is written here. Planning is a pure function of its arguments.
pub fn plan_balancing(
    manifest: &DatasetManifest,
    target_per_class: u64,
    roster: &[TransformId],
    master_seed: u64,
    force: bool,
    out_root: &Path,
) -> Result<AugmentationPlan, PipelineError> {
    if roster.is_empty() {
        return Err(PipelineError::EmptyRoster);
    }
    let counts = manifest.class_counts();
    let largest = counts.values().copied().max().unwrap_or(0);
    if target_per_class == 0 || (!force && target_per_class < largest) {
        return Err(PipelineError::InvalidTarget {
            target: target_per_class,
            largest,
        });
    }

    let no_items = Vec::new();
    let items = match manifest {
        DatasetManifest::Classification { items } => items,
        DatasetManifest::Segmentation { .. } => &no_items,
    };

    let mut records = Vec::new();
    let mut stream_index = 0u64;
    for (label, &count) in &counts {
        if count >= target_per_class {
            continue;
        }
        let sources: Vec<&super::ClassificationItem> =
            items.iter().filter(|item| &item.label == label).collect();
        let deficit = target_per_class - count;
        let full_rounds = deficit / count;
        let remainder = (deficit % count) as usize;
        let rounds = full_rounds + (remainder > 0) as u64;
        for q in 0..rounds {
            for (i, item) in sources.iter().enumerate() {
                let quota = full_rounds + (i < remainder) as u64;
                if q >= quota {
                    continue;
                }
                let op = roster[(i + q as usize) % roster.len()];
                let stem = item
                    .path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                let output = out_root
                    .join(label)
                    .join(provenance_file_name(&stem, op, q as u32));
                records.push(PlanRecord {
                    source: item.path.clone(),
                    label: label.clone(),
                    op,
                    occurrence: q as u32,
                    stream_index,
                    output,
                });
                stream_index += 1;
            }
        }
    }

    let mut seen = BTreeSet::new();
    for record in &records {
        if !seen.insert(record.output.clone()) {
            return Err(PipelineError::DuplicateOutput(record.output.clone()));
        }
        if record.output == record.source {
            return Err(PipelineError::OutputOverlapsInput(record.output.clone()));
        }
    }
    Ok(AugmentationPlan {
        master_seed,
        records,
    })
}
