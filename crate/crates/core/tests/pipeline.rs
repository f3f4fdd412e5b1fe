//! End-to-end pipeline flows against real directory trees.

use std::fs;
use std::path::Path;

use medaug_core::dataset::{
    collect_stats, parse_provenance, plan_balancing, run_balance, scan_dataset, DatasetManifest,
    TaskKind, DEFAULT_OP_ROSTER,
};
use medaug_core::geometric::GeometricParams;
use medaug_core::photometric::PhotometricParams;
use medaug_core::png;
use medaug_core::raster::{Channels, ImageBuffer};
use tempfile::tempdir;

fn write_gray(path: &Path, w: u32, h: u32, seed: u32) {
    let image = ImageBuffer::from_fn(w, h, Channels::Gray, |x, y, _| {
        ((x * 17 + y * 29 + seed * 41) % 256) as u8
    });
    png::write_image(path, &image).unwrap();
}

fn build_classification_tree(root: &Path, classes: &[(&str, u32)]) {
    for (label, count) in classes {
        let dir = root.join(label);
        fs::create_dir_all(&dir).unwrap();
        for i in 0..*count {
            write_gray(&dir.join(format!("case_{i:03}.png")), 16, 16, i);
        }
    }
}

#[test]
fn scan_plan_execute_balances_a_skewed_tree() {
    let dir = tempdir().unwrap();
    let input = dir.path().join("input");
    build_classification_tree(&input, &[("benign", 3), ("malignant", 8)]);

    let manifest = scan_dataset(&input, TaskKind::Classification).unwrap();
    assert_eq!(manifest.len(), 11);
    assert_eq!(manifest.class_counts()["benign"], 3);

    let out = dir.path().join("balanced");
    let report = run_balance(
        &input,
        &out,
        8,
        &DEFAULT_OP_ROSTER,
        42,
        &GeometricParams::default(),
        &PhotometricParams::default(),
    )
    .unwrap();
    assert_eq!(report.originals_copied, 11);
    assert_eq!(report.plan.records.len(), 5);
    assert_eq!(report.execution.failures(), 0);

    let rescanned = scan_dataset(&out, TaskKind::Classification).unwrap();
    let counts = rescanned.class_counts();
    assert_eq!(counts["benign"], 8);
    assert_eq!(counts["malignant"], 8);

    // Every augmented file names its source, transform, and occurrence.
    if let DatasetManifest::Classification { items } = &rescanned {
        let mut augmented = 0;
        for item in items {
            let name = item.path.file_name().unwrap().to_str().unwrap();
            if name.contains("__") {
                let (stem, _, _) = parse_provenance(name).unwrap();
                assert!(input.join(&item.label).join(format!("{stem}.png")).exists());
                augmented += 1;
            }
        }
        assert_eq!(augmented, 5);
    } else {
        panic!("expected a classification manifest");
    }
}

#[test]
fn manifest_json_round_trips_through_a_file() {
    let dir = tempdir().unwrap();
    let input = dir.path().join("input");
    build_classification_tree(&input, &[("a", 2), ("b", 1)]);
    let manifest = scan_dataset(&input, TaskKind::Classification).unwrap();

    let manifest_path = dir.path().join("manifest.json");
    fs::write(&manifest_path, manifest.to_json()).unwrap();
    let reloaded = DatasetManifest::from_json_file(&manifest_path).unwrap();
    assert_eq!(manifest, reloaded);
}

#[test]
fn planning_is_pure_and_repeatable() {
    let dir = tempdir().unwrap();
    let input = dir.path().join("input");
    build_classification_tree(&input, &[("a", 2), ("b", 9)]);
    let manifest = scan_dataset(&input, TaskKind::Classification).unwrap();
    let out = Path::new("out");
    let first = plan_balancing(&manifest, 9, &DEFAULT_OP_ROSTER, 7, false, out).unwrap();
    let second = plan_balancing(&manifest, 9, &DEFAULT_OP_ROSTER, 7, false, out).unwrap();
    assert_eq!(first, second);
    assert_eq!(first.records.len(), 7);
    assert!(!Path::new("out").exists(), "planning must not touch the disk");
}

#[test]
fn stats_reflect_the_tree() {
    let dir = tempdir().unwrap();
    let input = dir.path().join("input");
    build_classification_tree(&input, &[("a", 2), ("b", 3)]);
    let stats = collect_stats(&input, TaskKind::Classification).unwrap();
    assert_eq!(stats.total_items, 5);
    assert_eq!(stats.group_counts["a"], 2);
    assert_eq!(stats.group_counts["b"], 3);
    assert_eq!(stats.dimension_histogram[&(16, 16)], 5);
}
