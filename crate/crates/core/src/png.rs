//! Image file input and output.
//!
//! Decoding accepts 8-bit grayscale and RGB sources (PNG or JPEG); anything
//! carrying an alpha channel or a deeper sample format is rejected rather
//! than silently converted. All output is written as PNG, which keeps
//! augmented pixels lossless and byte-stable across reruns.

use std::path::Path;

use image::{DynamicImage, ImageFormat};
use thiserror::Error;

use crate::raster::{BinaryMask, Channels, ImageBuffer, RasterError};

/// Errors raised while reading or writing image files.
#[derive(Debug, Error)]
pub enum PngError {
    #[error("{path}: {source}")]
    Decode {
        path: String,
        source: image::ImageError,
    },
    #[error("{path}: {source}")]
    Encode {
        path: String,
        source: image::ImageError,
    },
    #[error("{path}: alpha channel not supported, flatten the image first")]
    AlphaChannel { path: String },
    #[error("{path}: unsupported sample format {color:?}, expected 8-bit grayscale or RGB")]
    UnsupportedColor { path: String, color: image::ColorType },
    #[error("{path}: mask must be grayscale, found {color:?}")]
    MaskNotGrayscale { path: String, color: image::ColorType },
    #[error("{path}: {source}")]
    Layout { path: String, source: RasterError },
}

fn path_str(path: &Path) -> String {
    path.display().to_string()
}

/// Reads an 8-bit grayscale or RGB image.
pub fn read_image(path: &Path) -> Result<ImageBuffer, PngError> {
    let decoded = image::open(path).map_err(|source| PngError::Decode {
        path: path_str(path),
        source,
    })?;
    let (width, height) = (decoded.width(), decoded.height());
    let (channels, samples) = match decoded {
        DynamicImage::ImageLuma8(buf) => (Channels::Gray, buf.into_raw()),
        DynamicImage::ImageRgb8(buf) => (Channels::Rgb, buf.into_raw()),
        DynamicImage::ImageLumaA8(_) | DynamicImage::ImageRgba8(_) => {
            return Err(PngError::AlphaChannel {
                path: path_str(path),
            })
        }
        other => {
            return Err(PngError::UnsupportedColor {
                path: path_str(path),
                color: other.color(),
            })
        }
    };
    ImageBuffer::new(width, height, channels, samples).map_err(|source| PngError::Layout {
        path: path_str(path),
        source,
    })
}

/// Writes an image as PNG, regardless of the path's extension.
pub fn write_image(path: &Path, image: &ImageBuffer) -> Result<(), PngError> {
    let color = match image.channels() {
        Channels::Gray => image::ExtendedColorType::L8,
        Channels::Rgb => image::ExtendedColorType::Rgb8,
    };
    image::save_buffer_with_format(
        path,
        image.samples(),
        image.width(),
        image.height(),
        color,
        ImageFormat::Png,
    )
    .map_err(|source| PngError::Encode {
        path: path_str(path),
        source,
    })
}

/// Reads a grayscale file as a mask, mapping samples `>= 128` to foreground.
///
/// The threshold tolerates masks that passed through lossy storage; files
/// already holding exact {0, 255} values load unchanged.
pub fn read_mask(path: &Path) -> Result<BinaryMask, PngError> {
    let decoded = image::open(path).map_err(|source| PngError::Decode {
        path: path_str(path),
        source,
    })?;
    let buf = match decoded {
        DynamicImage::ImageLuma8(buf) => buf,
        other => {
            return Err(PngError::MaskNotGrayscale {
                path: path_str(path),
                color: other.color(),
            })
        }
    };
    let (width, height) = (buf.width(), buf.height());
    let samples = buf
        .into_raw()
        .into_iter()
        .map(|v| if v >= 128 { 255u8 } else { 0u8 })
        .collect();
    BinaryMask::new(width, height, samples).map_err(|source| PngError::Layout {
        path: path_str(path),
        source,
    })
}

/// Writes a mask as a grayscale PNG holding exactly 0 and 255.
pub fn write_mask(path: &Path, mask: &BinaryMask) -> Result<(), PngError> {
    image::save_buffer_with_format(
        path,
        mask.samples(),
        mask.width(),
        mask.height(),
        image::ExtendedColorType::L8,
        ImageFormat::Png,
    )
    .map_err(|source| PngError::Encode {
        path: path_str(path),
        source,
    })
}

/// Reads `(width, height)` from the file header without decoding pixels.
pub fn read_dimensions(path: &Path) -> Result<(u32, u32), PngError> {
    image::image_dimensions(path).map_err(|source| PngError::Decode {
        path: path_str(path),
        source,
    })
}
