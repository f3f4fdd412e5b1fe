//! Raster containers and the shared quantization rules.
//!
//! Everything downstream operates on [`ImageBuffer`] (8-bit grayscale or RGB,
//! row-major, channel-interleaved) and [`BinaryMask`] (strictly 0 or 255).
//! Transform math happens in `f64`; [`clamp_round`] is the single place where
//! real values become bytes again.

use thiserror::Error;

/// Errors raised by raster constructors and color conversions.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum RasterError {
    #[error("expected {expected} channel(s), got {actual}")]
    ChannelMismatch { expected: u8, actual: u8 },
    #[error("dimension mismatch: {left_width}x{left_height} vs {right_width}x{right_height}")]
    DimensionMismatch {
        left_width: u32,
        left_height: u32,
        right_width: u32,
        right_height: u32,
    },
    #[error("zero-sized raster: {width}x{height}")]
    EmptyRaster { width: u32, height: u32 },
    #[error("sample buffer holds {actual} bytes, layout requires {expected}")]
    SampleLengthMismatch { expected: usize, actual: usize },
    #[error("mask sample {value} at index {index} is neither 0 nor 255")]
    NonBinaryMaskValue { index: usize, value: u8 },
}

/// Channel layout of an [`ImageBuffer`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channels {
    Gray,
    Rgb,
}

impl Channels {
    /// Samples per pixel.
    pub const fn count(self) -> usize {
        match self {
            Channels::Gray => 1,
            Channels::Rgb => 3,
        }
    }
}

/// An 8-bit image, row-major with interleaved channels.
///
/// Immutable after construction: transforms allocate fresh buffers rather
/// than mutating in place.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageBuffer {
    width: u32,
    height: u32,
    channels: Channels,
    samples: Vec<u8>,
}

impl ImageBuffer {
    /// Wraps a sample buffer, validating the layout.
    pub fn new(
        width: u32,
        height: u32,
        channels: Channels,
        samples: Vec<u8>,
    ) -> Result<Self, RasterError> {
        if width == 0 || height == 0 {
            return Err(RasterError::EmptyRaster { width, height });
        }
        let expected = width as usize * height as usize * channels.count();
        if samples.len() != expected {
            return Err(RasterError::SampleLengthMismatch {
                expected,
                actual: samples.len(),
            });
        }
        Ok(Self {
            width,
            height,
            channels,
            samples,
        })
    }

    /// An image with every sample set to `value`.
    pub fn filled(width: u32, height: u32, channels: Channels, value: u8) -> Self {
        let len = width as usize * height as usize * channels.count();
        Self::new(width, height, channels, vec![value; len])
            .expect("filled buffer matches its own layout")
    }

    /// Builds an image by evaluating `f(x, y, channel)` at every sample.
    pub fn from_fn(
        width: u32,
        height: u32,
        channels: Channels,
        mut f: impl FnMut(u32, u32, usize) -> u8,
    ) -> Self {
        let c = channels.count();
        let mut samples = Vec::with_capacity(width as usize * height as usize * c);
        for y in 0..height {
            for x in 0..width {
                for ch in 0..c {
                    samples.push(f(x, y, ch));
                }
            }
        }
        Self::new(width, height, channels, samples).expect("generated buffer matches its layout")
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> Channels {
        self.channels
    }

    /// Total pixels (not samples).
    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<u8> {
        self.samples
    }

    /// Flat index of `(x, y, channel)`.
    pub fn sample_index(&self, x: u32, y: u32, channel: usize) -> usize {
        debug_assert!(x < self.width && y < self.height && channel < self.channels.count());
        (y as usize * self.width as usize + x as usize) * self.channels.count() + channel
    }

    /// Sample at `(x, y, channel)`. Panics out of bounds.
    pub fn sample(&self, x: u32, y: u32, channel: usize) -> u8 {
        self.samples[self.sample_index(x, y, channel)]
    }

    /// Errors unless the image has exactly `expected` channels.
    pub fn require_channels(&self, expected: Channels) -> Result<(), RasterError> {
        if self.channels == expected {
            Ok(())
        } else {
            Err(RasterError::ChannelMismatch {
                expected: expected.count() as u8,
                actual: self.channels.count() as u8,
            })
        }
    }
}

/// A mask whose samples are exactly 0 (background) or 255 (foreground).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: u32,
    height: u32,
    samples: Vec<u8>,
}

impl BinaryMask {
    /// Wraps a buffer, rejecting any sample outside {0, 255}.
    pub fn new(width: u32, height: u32, samples: Vec<u8>) -> Result<Self, RasterError> {
        if width == 0 || height == 0 {
            return Err(RasterError::EmptyRaster { width, height });
        }
        let expected = width as usize * height as usize;
        if samples.len() != expected {
            return Err(RasterError::SampleLengthMismatch {
                expected,
                actual: samples.len(),
            });
        }
        for (index, &value) in samples.iter().enumerate() {
            if value != 0 && value != 255 {
                return Err(RasterError::NonBinaryMaskValue { index, value });
            }
        }
        Ok(Self {
            width,
            height,
            samples,
        })
    }

    /// All-background mask.
    pub fn empty(width: u32, height: u32) -> Self {
        Self::new(width, height, vec![0; width as usize * height as usize])
            .expect("zero buffer is binary")
    }

    /// Builds a mask from a foreground predicate.
    pub fn from_fn(width: u32, height: u32, mut foreground: impl FnMut(u32, u32) -> bool) -> Self {
        let mut samples = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                samples.push(if foreground(x, y) { 255 } else { 0 });
            }
        }
        Self::new(width, height, samples).expect("predicate output is binary")
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    pub fn sample(&self, x: u32, y: u32) -> u8 {
        debug_assert!(x < self.width && y < self.height);
        self.samples[y as usize * self.width as usize + x as usize]
    }

    /// Number of foreground (255) pixels.
    pub fn foreground_count(&self) -> usize {
        self.samples.iter().filter(|&&v| v == 255).count()
    }

    /// The mask as a single-channel image, for transforms shared with images.
    pub fn to_image(&self) -> ImageBuffer {
        ImageBuffer::new(
            self.width,
            self.height,
            Channels::Gray,
            self.samples.clone(),
        )
        .expect("mask layout is a valid grayscale layout")
    }

    /// Reclaims a mask from a grayscale image whose samples stayed in {0, 255}.
    pub fn from_image(image: &ImageBuffer) -> Result<Self, RasterError> {
        image.require_channels(Channels::Gray)?;
        Self::new(image.width(), image.height(), image.samples().to_vec())
    }
}

/// An image and its segmentation mask, dimension-locked together.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplePair {
    pub image: ImageBuffer,
    pub mask: BinaryMask,
}

impl SamplePair {
    pub fn new(image: ImageBuffer, mask: BinaryMask) -> Result<Self, RasterError> {
        check_same_dims(image.width(), image.height(), mask.width(), mask.height())?;
        Ok(Self { image, mask })
    }

    pub fn width(&self) -> u32 {
        self.image.width()
    }

    pub fn height(&self) -> u32 {
        self.image.height()
    }
}

/// Real-valued Cb/Cr planes produced by [`rgb_to_luma`].
///
/// Kept unquantized so a luma-only edit followed by [`luma_to_rgb`] loses
/// nothing in the color channels.
#[derive(Debug, Clone, PartialEq)]
pub struct ChromaPlanes {
    width: u32,
    height: u32,
    cb: Vec<f64>,
    cr: Vec<f64>,
}

impl ChromaPlanes {
    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn cb(&self) -> &[f64] {
        &self.cb
    }

    pub fn cr(&self) -> &[f64] {
        &self.cr
    }
}

/// Quantizes a real sample: round half away from zero, then clamp to `[0, 255]`.
///
/// `f64::round` already rounds halves away from zero, so 127.5 becomes 128
/// and 254.5 becomes 255.
pub fn clamp_round(value: f64) -> u8 {
    value.round().clamp(0.0, 255.0) as u8
}

/// Splits an RGB image into a quantized BT.601 luma image and exact chroma planes.
///
/// Luma uses `Y = 0.299 R + 0.587 G + 0.114 B`. Chroma stays real-valued:
/// `Cb = -0.168736 R - 0.331264 G + 0.5 B + 128` and
/// `Cr = 0.5 R - 0.418688 G - 0.081312 B + 128`.
pub fn rgb_to_luma(image: &ImageBuffer) -> Result<(ImageBuffer, ChromaPlanes), RasterError> {
    image.require_channels(Channels::Rgb)?;
    let pixels = image.pixel_count();
    let mut luma = Vec::with_capacity(pixels);
    let mut cb = Vec::with_capacity(pixels);
    let mut cr = Vec::with_capacity(pixels);
    for rgb in image.samples().chunks_exact(3) {
        let (r, g, b) = (rgb[0] as f64, rgb[1] as f64, rgb[2] as f64);
        luma.push(clamp_round(0.299 * r + 0.587 * g + 0.114 * b));
        cb.push(-0.168736 * r - 0.331264 * g + 0.5 * b + 128.0);
        cr.push(0.5 * r - 0.418688 * g - 0.081312 * b + 128.0);
    }
    let luma = ImageBuffer::new(image.width(), image.height(), Channels::Gray, luma)?;
    let chroma = ChromaPlanes {
        width: image.width(),
        height: image.height(),
        cb,
        cr,
    };
    Ok((luma, chroma))
}

/// Recombines a (possibly edited) luma image with chroma planes into RGB.
///
/// Inverse of [`rgb_to_luma`]: `R = Y + 1.402 (Cr - 128)`,
/// `G = Y - 0.344136 (Cb - 128) - 0.714136 (Cr - 128)`,
/// `B = Y + 1.772 (Cb - 128)`, each quantized through [`clamp_round`].
pub fn luma_to_rgb(luma: &ImageBuffer, chroma: &ChromaPlanes) -> Result<ImageBuffer, RasterError> {
    luma.require_channels(Channels::Gray)?;
    check_same_dims(luma.width(), luma.height(), chroma.width, chroma.height)?;
    let mut rgb = Vec::with_capacity(luma.pixel_count() * 3);
    for (i, &y) in luma.samples().iter().enumerate() {
        let y = y as f64;
        let cb = chroma.cb[i] - 128.0;
        let cr = chroma.cr[i] - 128.0;
        rgb.push(clamp_round(y + 1.402 * cr));
        rgb.push(clamp_round(y - 0.344136 * cb - 0.714136 * cr));
        rgb.push(clamp_round(y + 1.772 * cb));
    }
    ImageBuffer::new(luma.width(), luma.height(), Channels::Rgb, rgb)
}

pub(crate) fn check_same_dims(
    left_width: u32,
    left_height: u32,
    right_width: u32,
    right_height: u32,
) -> Result<(), RasterError> {
    if left_width == right_width && left_height == right_height {
        Ok(())
    } else {
        Err(RasterError::DimensionMismatch {
            left_width,
            left_height,
            right_width,
            right_height,
        })
    }
}
