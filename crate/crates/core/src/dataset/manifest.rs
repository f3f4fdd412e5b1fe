//! Dataset discovery and the manifest it produces.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::png;

/// Which dataset layout to scan for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Classification,
    Segmentation,
}

/// Train/test membership of a segmentation item.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn dir_name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

/// One labeled classification image.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassificationItem {
    pub path: PathBuf,
    pub label: String,
}

/// One image/mask pair in a segmentation split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentationItem {
    pub image: PathBuf,
    pub mask: PathBuf,
    pub split: Split,
}

/// Snapshot of a dataset directory with a fixed, reproducible item order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "lowercase")]
pub enum DatasetManifest {
    Classification { items: Vec<ClassificationItem> },
    Segmentation { items: Vec<SegmentationItem> },
}

impl DatasetManifest {
    pub fn len(&self) -> usize {
        match self {
            DatasetManifest::Classification { items } => items.len(),
            DatasetManifest::Segmentation { items } => items.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Item count per class label (classification manifests).
    pub fn class_counts(&self) -> BTreeMap<String, u64> {
        let mut counts = BTreeMap::new();
        if let DatasetManifest::Classification { items } = self {
            for item in items {
                *counts.entry(item.label.clone()).or_insert(0) += 1;
            }
        }
        counts
    }

    /// Item count per split (segmentation manifests).
    pub fn split_counts(&self) -> BTreeMap<Split, u64> {
        let mut counts = BTreeMap::new();
        if let DatasetManifest::Segmentation { items } = self {
            for item in items {
                *counts.entry(item.split).or_insert(0) += 1;
            }
        }
        counts
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn from_json_file(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| PipelineError::ManifestFormat {
            path: path.to_path_buf(),
            source,
        })
    }
}

fn has_image_extension(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()),
        Some(ext) if ext.eq_ignore_ascii_case("png")
            || ext.eq_ignore_ascii_case("jpg")
            || ext.eq_ignore_ascii_case("jpeg")
    )
}

fn is_hidden(path: &Path) -> bool {
    path.file_name()
        .and_then(|n| n.to_str())
        .map_or(false, |n| n.starts_with('.'))
}

fn sort_paths(paths: &mut [PathBuf]) {
    paths.sort_by(|a, b| {
        a.as_os_str()
            .as_encoded_bytes()
            .cmp(b.as_os_str().as_encoded_bytes())
    });
}

/// Image files directly under `dir`, bytewise sorted. `None` if the
/// directory itself is missing.
pub(super) fn image_files(dir: &Path) -> Result<Option<Vec<PathBuf>>, PipelineError> {
    if !dir.is_dir() {
        return Ok(None);
    }
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| PipelineError::io(dir, e))? {
        let entry = entry.map_err(|e| PipelineError::io(dir, e))?;
        let path = entry.path();
        if path.is_file() && has_image_extension(&path) && !is_hidden(&path) {
            files.push(path);
        }
    }
    sort_paths(&mut files);
    Ok(Some(files))
}

fn scan_classification(root: &Path) -> Result<DatasetManifest, PipelineError> {
    if !root.is_dir() {
        return Err(PipelineError::MissingDirectory(root.to_path_buf()));
    }
    let mut class_dirs = Vec::new();
    for entry in fs::read_dir(root).map_err(|e| PipelineError::io(root, e))? {
        let entry = entry.map_err(|e| PipelineError::io(root, e))?;
        let path = entry.path();
        if path.is_dir() && !is_hidden(&path) {
            class_dirs.push(path);
        }
    }
    if class_dirs.is_empty() {
        return Err(PipelineError::MissingDirectory(root.to_path_buf()));
    }
    sort_paths(&mut class_dirs);
    let mut items = Vec::new();
    for dir in class_dirs {
        let label = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let files = image_files(&dir)?.expect("listed from parent");
        if files.is_empty() {
            return Err(PipelineError::EmptyClass(label));
        }
        for path in files {
            items.push(ClassificationItem {
                path,
                label: label.clone(),
            });
        }
    }
    items.sort_by(|a, b| {
        a.path
            .as_os_str()
            .as_encoded_bytes()
            .cmp(b.path.as_os_str().as_encoded_bytes())
    });
    Ok(DatasetManifest::Classification { items })
}

pub(super) fn file_stem_string(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn scan_split(root: &Path, split: Split) -> Result<Vec<SegmentationItem>, PipelineError> {
    let images_dir = root.join(split.dir_name()).join("images");
    let masks_dir = root.join(split.dir_name()).join("masks");
    let images = image_files(&images_dir)?
        .ok_or_else(|| PipelineError::MissingDirectory(images_dir.clone()))?;
    let masks =
        image_files(&masks_dir)?.ok_or_else(|| PipelineError::MissingDirectory(masks_dir))?;
    if images.is_empty() {
        return Err(PipelineError::MissingDirectory(images_dir));
    }

    let mut masks_by_stem: BTreeMap<String, PathBuf> = BTreeMap::new();
    for mask in masks {
        masks_by_stem.insert(file_stem_string(&mask), mask);
    }
    let mut items = Vec::new();
    for image in images {
        let stem = file_stem_string(&image);
        match masks_by_stem.remove(&stem) {
            Some(mask) => items.push(SegmentationItem { image, mask, split }),
            None => return Err(PipelineError::UnpairedMask(image)),
        }
    }
    if let Some((_, orphan)) = masks_by_stem.into_iter().next() {
        return Err(PipelineError::UnpairedMask(orphan));
    }
    Ok(items)
}

fn scan_segmentation(root: &Path) -> Result<DatasetManifest, PipelineError> {
    if !root.is_dir() {
        return Err(PipelineError::MissingDirectory(root.to_path_buf()));
    }
    let mut items = scan_split(root, Split::Train)?;
    items.extend(scan_split(root, Split::Test)?);
    Ok(DatasetManifest::Segmentation { items })
}

/// Scans a dataset root into a manifest with deterministic item order.
pub fn scan_dataset(root: &Path, task: TaskKind) -> Result<DatasetManifest, PipelineError> {
    match task {
        TaskKind::Classification => scan_classification(root),
        TaskKind::Segmentation => scan_segmentation(root),
    }
}

/// Counts plus an image-dimension histogram for a dataset tree.
#[derive(Debug, Clone)]
pub struct DatasetStats {
    pub task: TaskKind,
    /// Items per class (classification) or per split (segmentation).
    pub group_counts: BTreeMap<String, u64>,
    /// `(width, height) -> image count` over all referenced images.
    pub dimension_histogram: BTreeMap<(u32, u32), u64>,
    pub total_items: u64,
}

/// Scans `root` and measures every referenced image header.
pub fn collect_stats(root: &Path, task: TaskKind) -> Result<DatasetStats, PipelineError> {
    let manifest = scan_dataset(root, task)?;
    let mut dimension_histogram = BTreeMap::new();
    let mut group_counts = BTreeMap::new();
    match &manifest {
        DatasetManifest::Classification { items } => {
            for item in items {
                *group_counts.entry(item.label.clone()).or_insert(0) += 1;
                let dims = png::read_dimensions(&item.path)?;
                *dimension_histogram.entry(dims).or_insert(0) += 1;
            }
        }
        DatasetManifest::Segmentation { items } => {
            for item in items {
                *group_counts
                    .entry(item.split.dir_name().to_string())
                    .or_insert(0) += 1;
                let dims = png::read_dimensions(&item.image)?;
                *dimension_histogram.entry(dims).or_insert(0) += 1;
            }
        }
    }
    Ok(DatasetStats {
        task,
        group_counts,
        dimension_histogram,
        total_items: manifest.len() as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::png::write_image;
    use crate::raster::{Channels, ImageBuffer};
    use tempfile::tempdir;

    fn drop_image(path: &Path, value: u8) {
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        write_image(path, &ImageBuffer::filled(8, 6, Channels::Gray, value)).unwrap();
    }

    #[test]
    fn classification_scan_sorts_and_labels() {
        let dir = tempdir().unwrap();
        drop_image(&dir.path().join("benign/b2.png"), 1);
        drop_image(&dir.path().join("benign/b1.png"), 2);
        drop_image(&dir.path().join("malignant/m1.png"), 3);
        fs::write(dir.path().join("benign/notes.txt"), "skip me").unwrap();

        let manifest = scan_dataset(dir.path(), TaskKind::Classification).unwrap();
        let DatasetManifest::Classification { items } = &manifest else {
            panic!("wrong task");
        };
        let names: Vec<_> = items
            .iter()
            .map(|i| (i.label.as_str(), file_stem_string(&i.path)))
            .collect();
        assert_eq!(
            names,
            vec![
                ("benign", "b1".to_string()),
                ("benign", "b2".to_string()),
                ("malignant", "m1".to_string()),
            ]
        );
        assert_eq!(manifest.class_counts()["benign"], 2);
    }

    #[test]
    fn classification_scan_rejects_bad_roots() {
        let dir = tempdir().unwrap();
        assert!(matches!(
            scan_dataset(&dir.path().join("nowhere"), TaskKind::Classification),
            Err(PipelineError::MissingDirectory(_))
        ));
        // A root with no class subdirectories is as useless as a missing one.
        assert!(matches!(
            scan_dataset(dir.path(), TaskKind::Classification),
            Err(PipelineError::MissingDirectory(_))
        ));
        fs::create_dir(dir.path().join("empty_class")).unwrap();
        assert!(matches!(
            scan_dataset(dir.path(), TaskKind::Classification),
            Err(PipelineError::EmptyClass(label)) if label == "empty_class"
        ));
    }

    #[test]
    fn scanning_is_deterministic() {
        let dir = tempdir().unwrap();
        for name in ["z9", "a1", "m5"] {
            drop_image(&dir.path().join(format!("c/{name}.png")), 0);
        }
        let a = scan_dataset(dir.path(), TaskKind::Classification).unwrap();
        let b = scan_dataset(dir.path(), TaskKind::Classification).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn segmentation_scan_pairs_by_stem() {
        let dir = tempdir().unwrap();
        drop_image(&dir.path().join("train/images/s1.png"), 1);
        drop_image(&dir.path().join("train/masks/s1.png"), 0);
        drop_image(&dir.path().join("test/images/t1.png"), 2);
        drop_image(&dir.path().join("test/masks/t1.png"), 0);

        let manifest = scan_dataset(dir.path(), TaskKind::Segmentation).unwrap();
        let DatasetManifest::Segmentation { items } = &manifest else {
            panic!("wrong task");
        };
        assert_eq!(items.len(), 2);
        assert_eq!(items[0].split, Split::Train);
        assert_eq!(items[1].split, Split::Test);
        assert_eq!(manifest.split_counts()[&Split::Train], 1);
    }

    #[test]
    fn segmentation_scan_names_orphans() {
        let dir = tempdir().unwrap();
        drop_image(&dir.path().join("train/images/s1.png"), 1);
        drop_image(&dir.path().join("train/masks/s1.png"), 0);
        drop_image(&dir.path().join("train/images/widow.png"), 1);
        drop_image(&dir.path().join("test/images/t1.png"), 2);
        drop_image(&dir.path().join("test/masks/t1.png"), 0);

        match scan_dataset(dir.path(), TaskKind::Segmentation) {
            Err(PipelineError::UnpairedMask(path)) => {
                assert!(path.ends_with("train/images/widow.png"));
            }
            other => panic!("expected unpaired error, got {other:?}"),
        }
    }

    #[test]
    fn segmentation_scan_requires_layout_dirs() {
        let dir = tempdir().unwrap();
        drop_image(&dir.path().join("train/images/s1.png"), 1);
        assert!(matches!(
            scan_dataset(dir.path(), TaskKind::Segmentation),
            Err(PipelineError::MissingDirectory(_))
        ));
    }

    #[test]
    fn manifest_json_round_trip() {
        let dir = tempdir().unwrap();
        drop_image(&dir.path().join("c1/x.png"), 1);
        let manifest = scan_dataset(dir.path(), TaskKind::Classification).unwrap();
        let json = manifest.to_json();
        assert!(json.contains("\"task\": \"classification\""));
        let path = dir.path().join("manifest.json");
        fs::write(&path, &json).unwrap();
        assert_eq!(DatasetManifest::from_json_file(&path).unwrap(), manifest);
    }

    #[test]
    fn stats_histogram_counts_dimensions() {
        let dir = tempdir().unwrap();
        drop_image(&dir.path().join("c1/a.png"), 1);
        drop_image(&dir.path().join("c1/b.png"), 2);
        let stats = collect_stats(dir.path(), TaskKind::Classification).unwrap();
        assert_eq!(stats.total_items, 2);
        assert_eq!(stats.dimension_histogram[&(8, 6)], 2);
        assert_eq!(stats.group_counts["c1"], 2);
    }
}
