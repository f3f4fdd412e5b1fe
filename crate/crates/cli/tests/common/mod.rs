//! Helpers shared by the CLI test binaries.
#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use medaug_core::png;
use medaug_core::raster::{BinaryMask, Channels, ImageBuffer};
use medaug_core::rng::RngStream;
use sha2::{Digest, Sha256};

pub fn medaug() -> Command {
    Command::new(env!("CARGO_BIN_EXE_medaug"))
}

pub fn run_ok(cmd: &mut Command) -> Output {
    let output = cmd.output().expect("binary runs");
    assert!(
        output.status.success(),
        "command failed: {cmd:?}\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
    output
}

pub fn random_image(w: u32, h: u32, channels: Channels, seed: u64) -> ImageBuffer {
    let mut stream = RngStream::derive(seed, 0);
    ImageBuffer::from_fn(w, h, channels, |_, _, _| {
        (stream.next_uniform() * 256.0) as u8
    })
}

pub fn random_mask(w: u32, h: u32, density: f64, seed: u64) -> BinaryMask {
    let mut stream = RngStream::derive(seed, 1);
    BinaryMask::from_fn(w, h, |_, _| stream.next_uniform() < density)
}

pub fn write_random_gray(path: &Path, w: u32, h: u32, seed: u64) {
    png::write_image(path, &random_image(w, h, Channels::Gray, seed)).unwrap();
}

pub fn write_random_mask(path: &Path, w: u32, h: u32, seed: u64) {
    png::write_mask(path, &random_mask(w, h, 0.4, seed)).unwrap();
}

pub fn build_classification_tree(root: &Path, classes: &[(&str, u32)]) {
    let mut seed = 0u64;
    for (label, count) in classes {
        let dir = root.join(label);
        fs::create_dir_all(&dir).unwrap();
        for i in 0..*count {
            write_random_gray(&dir.join(format!("case_{i:04}.png")), 64, 64, seed);
            seed += 1;
        }
    }
}

pub fn build_segmentation_tree(root: &Path, train: u32, test: u32) {
    for (split, count) in [("train", train), ("test", test)] {
        let images = root.join(split).join("images");
        let masks = root.join(split).join("masks");
        fs::create_dir_all(&images).unwrap();
        fs::create_dir_all(&masks).unwrap();
        for i in 0..count {
            let name = format!("{split}_{i:04}.png");
            let seed = u64::from(count) * 31 + u64::from(i);
            write_random_gray(&images.join(&name), 64, 64, seed);
            write_random_mask(&masks.join(&name), 64, 64, seed + 1000);
        }
    }
}

/// SHA-256 over every file's relative path and bytes, visited in sorted
/// order, so two directory trees compare equal iff their contents do.
pub fn tree_hash(root: &Path) -> [u8; 32] {
    fn walk(dir: &Path, files: &mut Vec<PathBuf>) {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(&path, files);
            } else {
                files.push(path);
            }
        }
    }
    let mut files = Vec::new();
    walk(root, &mut files);
    files.sort();
    let mut hasher = Sha256::new();
    for file in files {
        hasher.update(
            file.strip_prefix(root)
                .unwrap()
                .to_string_lossy()
                .as_bytes(),
        );
        hasher.update([0u8]);
        hasher.update(fs::read(&file).unwrap());
        hasher.update([0xffu8]);
    }
    hasher.finalize().into()
}

pub fn count_files(dir: &Path) -> usize {
    fs::read_dir(dir)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().is_file())
        .count()
}

pub fn file_names(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}
