//! Photometric transforms: brightness, contrast, additive noise, and
//! luminance histogram equalization.
//!
//! All four act on pixel values only and never touch geometry. Brightness
//! and contrast are per-value lookups; noise draws one Gaussian offset per
//! sample from a caller-supplied stream; equalization operates on the BT.601
//! luma channel and leaves chroma untouched, so colors keep their hue while
//! the tonal range spreads.

use thiserror::Error;

use crate::raster::{clamp_round, luma_to_rgb, rgb_to_luma, Channels, ImageBuffer};
use crate::rng::{RngError, RngStream};

/// Errors raised by photometric transforms.
#[derive(Debug, Error, PartialEq)]
pub enum PhotometricError {
    #[error("invalid contrast factor {0}: must be finite and non-negative")]
    InvalidFactor(f64),
    #[error(transparent)]
    InvalidSigma(#[from] RngError),
}

/// Shared knobs for the photometric transform family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotometricParams {
    pub brightness_delta: i32,
    pub contrast_factor: f64,
    pub noise_sigma: f64,
    pub noise_mean: f64,
}

impl Default for PhotometricParams {
    fn default() -> Self {
        Self {
            brightness_delta: 40,
            contrast_factor: 1.5,
            noise_sigma: 10.0,
            noise_mean: 0.0,
        }
    }
}

fn map_samples(image: &ImageBuffer, lut: &[u8; 256]) -> ImageBuffer {
    let samples = image.samples().iter().map(|&v| lut[v as usize]).collect();
    ImageBuffer::new(image.width(), image.height(), image.channels(), samples)
        .expect("lookup preserves layout")
}

/// Adds `delta` to every sample, saturating at the byte range.
pub fn adjust_brightness(image: &ImageBuffer, delta: i32) -> ImageBuffer {
    let mut lut = [0u8; 256];
    for (v, slot) in lut.iter_mut().enumerate() {
        *slot = clamp_round(v as f64 + delta as f64);
    }
    map_samples(image, &lut)
}

/// Stretches samples about the byte midpoint:
/// `out = (v - 127.5) * factor + 127.5`.
pub fn adjust_contrast(image: &ImageBuffer, factor: f64) -> Result<ImageBuffer, PhotometricError> {
    if !factor.is_finite() || factor < 0.0 {
        return Err(PhotometricError::InvalidFactor(factor));
    }
    let mut lut = [0u8; 256];
    for (v, slot) in lut.iter_mut().enumerate() {
        *slot = clamp_round((v as f64 - 127.5) * factor + 127.5);
    }
    Ok(map_samples(image, &lut))
}

/// Adds one Gaussian offset per sample, in storage order (row-major,
/// channel varying fastest). `sigma == 0` reproduces the input exactly.
pub fn add_gaussian_noise(
    image: &ImageBuffer,
    stream: &mut RngStream,
    mean: f64,
    sigma: f64,
) -> Result<ImageBuffer, PhotometricError> {
    let mut samples = Vec::with_capacity(image.samples().len());
    for &v in image.samples() {
        let offset = stream.sample_gaussian(mean, sigma)?;
        samples.push(clamp_round(v as f64 + offset));
    }
    Ok(
        ImageBuffer::new(image.width(), image.height(), image.channels(), samples)
            .expect("noise preserves layout"),
    )
}

/// Builds the equalization lookup table for a 256-bin histogram.
///
/// With `cdf` the cumulative histogram, `cdf_min` its first nonzero entry,
/// and `total` the pixel count, each occupied value maps to
/// `clamp_round(255 * (cdf(v) - cdf_min) / (total - cdf_min))`. Returns
/// `None` when every pixel shares one value and the stretch is undefined.
pub fn equalization_lut(histogram: &[u64; 256], total: u64) -> Option<[u8; 256]> {
    debug_assert_eq!(histogram.iter().sum::<u64>(), total);
    let cdf_min = histogram.iter().copied().find(|&count| count > 0)?;
    if cdf_min == total {
        return None;
    }
    let denom = (total - cdf_min) as f64;
    let mut lut = [0u8; 256];
    let mut cdf = 0u64;
    for (v, slot) in lut.iter_mut().enumerate() {
        cdf += histogram[v];
        let spread = 255.0 * (cdf as f64 - cdf_min as f64) / denom;
        *slot = clamp_round(spread);
    }
    Some(lut)
}

fn equalize_plane(image: &ImageBuffer) -> ImageBuffer {
    let mut histogram = [0u64; 256];
    for &v in image.samples() {
        histogram[v as usize] += 1;
    }
    match equalization_lut(&histogram, image.samples().len() as u64) {
        Some(lut) => map_samples(image, &lut),
        None => image.clone(),
    }
}

/// Histogram-equalizes the luminance channel.
///
/// Grayscale images are equalized directly. RGB images are split with
/// [`rgb_to_luma`], the luma plane is equalized, and the original chroma
/// planes are recombined, so only brightness redistributes. Constant images
/// pass through unchanged.
pub fn equalize_histogram_luma(image: &ImageBuffer) -> ImageBuffer {
    match image.channels() {
        Channels::Gray => equalize_plane(image),
        Channels::Rgb => {
            let (luma, chroma) = rgb_to_luma(image).expect("channel count checked");
            let equalized = equalize_plane(&luma);
            luma_to_rgb(&equalized, &chroma).expect("dimensions preserved")
        }
    }
}
