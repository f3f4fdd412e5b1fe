//! Deterministic, reproducible image augmentation for small imaging datasets.
//!
//! The crate is organized around plain `u8` raster buffers ([`raster::ImageBuffer`],
//! [`raster::BinaryMask`]) and pure transform functions over them. All arithmetic
//! runs in `f64` and is quantized once at the output boundary, so every operation
//! is bit-reproducible across runs, platforms, and worker counts.
//!
//! Module map:
//!
//! * [`raster`]: pixel containers, quantization, BT.601 luma/chroma conversion
//! * [`png`]: 8-bit grayscale/RGB PNG input and output
//! * [`rng`]: seeded random streams plus Gaussian and Beta samplers
//! * [`geometric`]: rotation, scaling, translation, shear, flip, center crop
//! * [`photometric`]: brightness, contrast, additive noise, histogram equalization
//! * [`mixup`]: convex image blending with mask-aware label handling
//! * [`metrics`]: Dice overlap and binary classification accuracy
//! * [`dataset`]: directory scanning, balancing plans, batch execution

pub mod dataset;
pub mod geometric;
pub mod metrics;
pub mod mixup;
pub mod photometric;
pub mod png;
pub mod raster;
pub mod rng;
