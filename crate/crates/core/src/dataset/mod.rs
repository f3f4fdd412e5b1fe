//! Dataset plumbing: directory scanning, balancing plans, batch execution.
//!
//! A classification tree holds one subdirectory per class; a segmentation
//! tree holds `train/{images,masks}` and `test/{images,masks}` with masks
//! paired to images by file stem. Scanning produces a [`DatasetManifest`]
//! whose item order is fixed (paths sorted bytewise ascending), planning
//! turns a manifest into an [`AugmentationPlan`] of provenance-named output
//! records, and execution materializes records into an output tree without
//! ever touching a source file.

mod execute;
mod manifest;
mod plan;

pub use execute::{
    execute_plan, expand_segmentation_set, mixup_directories, run_balance, BalanceReport,
    ExecutionReport, ExpandReport, MixupDirReport, RecordOutcome,
};
pub use manifest::{
    collect_stats, scan_dataset, ClassificationItem, DatasetManifest, DatasetStats,
    SegmentationItem, Split, TaskKind,
};
pub use plan::{
    parse_provenance, plan_balancing, provenance_file_name, AugmentationPlan, PlanRecord,
    TransformId, DEFAULT_OP_ROSTER,
};

use std::path::PathBuf;

use thiserror::Error;

use crate::geometric::GeometricError;
use crate::mixup::MixupError;
use crate::photometric::PhotometricError;
use crate::png::PngError;

/// Errors raised while scanning, planning, or executing dataset work.
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("missing or empty directory: {0}")]
    MissingDirectory(PathBuf),
    #[error("class directory {0:?} contains no images")]
    EmptyClass(String),
    #[error("no counterpart paired with {0}")]
    UnpairedMask(PathBuf),
    #[error(
        "target {target} per class is invalid: largest class already holds {largest} \
         (use force to keep oversized classes as they are)"
    )]
    InvalidTarget { target: u64, largest: u64 },
    #[error("operation roster is empty")]
    EmptyRoster,
    #[error("output path {0} appears twice in the plan")]
    DuplicateOutput(PathBuf),
    #[error("output directory {0} would overwrite the input tree")]
    OutputOverlapsInput(PathBuf),
    #[error(transparent)]
    Image(#[from] PngError),
    #[error(transparent)]
    Geometry(#[from] GeometricError),
    #[error(transparent)]
    Photometry(#[from] PhotometricError),
    #[error(transparent)]
    Mixup(#[from] MixupError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("manifest {path}: {source}")]
    ManifestFormat {
        path: PathBuf,
        source: serde_json::Error,
    },
}

impl PipelineError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        PipelineError::Io {
            path: path.into(),
            source,
        }
    }
}
