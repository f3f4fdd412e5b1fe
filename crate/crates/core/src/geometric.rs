//! Geometric transforms: rotation, flip, translation, scaling, shear, crop.
//!
//! Resampling transforms use inverse mapping: every output pixel pulls from
//! the source, so no holes appear. Scaling places samples on half-pixel
//! centers (`src = (dst + 0.5) / factor - 0.5`) and clamps out-of-range
//! neighbors to the nearest edge; shear maps `x_src = x - k * y` on integer
//! pixel coordinates and fills pixels whose source falls outside the image.
//!
//! Images interpolate bilinearly. Masks use nearest-neighbor sampling (or
//! plain index permutation where no resampling is involved), so mask outputs
//! stay strictly binary.

use thiserror::Error;

use crate::raster::{clamp_round, BinaryMask, ImageBuffer};

/// Errors raised by geometric transforms.
#[derive(Debug, Error, PartialEq)]
pub enum GeometricError {
    #[error("invalid scale factor {0}: must be positive, finite, and keep dimensions in range")]
    InvalidFactor(f64),
    #[error("crop target {target_width}x{target_height} exceeds source {width}x{height}")]
    TargetTooLarge {
        target_width: u32,
        target_height: u32,
        width: u32,
        height: u32,
    },
    #[error("crop target must be at least 1x1")]
    EmptyTarget,
}

/// Shared knobs for the geometric transform family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometricParams {
    pub scale_factor: f64,
    pub translate_dx: i32,
    pub translate_dy: i32,
    pub shear_k: f64,
    pub fill_value: u8,
}

impl Default for GeometricParams {
    fn default() -> Self {
        Self {
            scale_factor: 1.2,
            translate_dx: 20,
            translate_dy: 30,
            shear_k: 0.2,
            fill_value: 0,
        }
    }
}

/// Rotates 90 degrees clockwise. Input pixel `(row r, col c)` lands at
/// output `(row c, col H-1-r)`; a WxH image becomes HxW.
pub fn rotate90_cw(image: &ImageBuffer) -> ImageBuffer {
    let (w, h) = (image.width(), image.height());
    let channels = image.channels();
    ImageBuffer::from_fn(h, w, channels, |x, y, ch| {
        image.sample(y, h - 1 - x, ch)
    })
}

/// Mask counterpart of [`rotate90_cw`]; pure index permutation.
pub fn rotate90_cw_mask(mask: &BinaryMask) -> BinaryMask {
    BinaryMask::from_image(&rotate90_cw(&mask.to_image())).expect("permutation preserves values")
}

/// Mirrors left-right: output `(r, c)` reads input `(r, W-1-c)`.
pub fn flip_horizontal(image: &ImageBuffer) -> ImageBuffer {
    let w = image.width();
    ImageBuffer::from_fn(w, image.height(), image.channels(), |x, y, ch| {
        image.sample(w - 1 - x, y, ch)
    })
}

/// Mask counterpart of [`flip_horizontal`].
pub fn flip_horizontal_mask(mask: &BinaryMask) -> BinaryMask {
    BinaryMask::from_image(&flip_horizontal(&mask.to_image()))
        .expect("permutation preserves values")
}

/// Shifts by whole pixels; vacated areas take `fill`.
///
/// Output `(r, c)` reads input `(r - dy, c - dx)` when that lies inside the
/// image. Positive `dx` moves content right, positive `dy` moves it down.
pub fn translate(image: &ImageBuffer, dx: i32, dy: i32, fill: u8) -> ImageBuffer {
    let (w, h) = (image.width() as i64, image.height() as i64);
    ImageBuffer::from_fn(
        image.width(),
        image.height(),
        image.channels(),
        |x, y, ch| {
            let sx = x as i64 - dx as i64;
            let sy = y as i64 - dy as i64;
            if sx >= 0 && sx < w && sy >= 0 && sy < h {
                image.sample(sx as u32, sy as u32, ch)
            } else {
                fill
            }
        },
    )
}

/// Mask counterpart of [`translate`]; vacated areas become background.
pub fn translate_mask(mask: &BinaryMask, dx: i32, dy: i32) -> BinaryMask {
    BinaryMask::from_image(&translate(&mask.to_image(), dx, dy, 0))
        .expect("shift preserves binary values")
}

fn scaled_dims(width: u32, height: u32, factor: f64) -> Result<(u32, u32), GeometricError> {
    if !factor.is_finite() || factor <= 0.0 {
        return Err(GeometricError::InvalidFactor(factor));
    }
    let out_w = (width as f64 * factor).round().max(1.0);
    let out_h = (height as f64 * factor).round().max(1.0);
    if out_w > u32::MAX as f64 || out_h > u32::MAX as f64 {
        return Err(GeometricError::InvalidFactor(factor));
    }
    Ok((out_w as u32, out_h as u32))
}

/// Precomputed inverse mapping for one axis: neighbor indices plus the
/// interpolation fraction for every destination coordinate.
struct AxisMap {
    lo: Vec<u32>,
    hi: Vec<u32>,
    t: Vec<f64>,
}

fn axis_map(src_len: u32, dst_len: u32, factor: f64) -> AxisMap {
    let last = src_len as i64 - 1;
    let mut lo = Vec::with_capacity(dst_len as usize);
    let mut hi = Vec::with_capacity(dst_len as usize);
    let mut t = Vec::with_capacity(dst_len as usize);
    for d in 0..dst_len {
        let s = (d as f64 + 0.5) / factor - 0.5;
        let floor = s.floor();
        let base = floor as i64;
        lo.push(base.clamp(0, last) as u32);
        hi.push((base + 1).clamp(0, last) as u32);
        t.push(s - floor);
    }
    AxisMap { lo, hi, t }
}

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + t * (b - a)
}

/// Resizes by `factor` with bilinear interpolation.
///
/// Output dimensions are `max(1, round(dim * factor))` per axis. A factor of
/// exactly 1.0 reproduces the input bit for bit.
pub fn scale(image: &ImageBuffer, factor: f64) -> Result<ImageBuffer, GeometricError> {
    let (out_w, out_h) = scaled_dims(image.width(), image.height(), factor)?;
    let xs = axis_map(image.width(), out_w, factor);
    let ys = axis_map(image.height(), out_h, factor);
    let n_ch = image.channels().count();
    let mut samples = Vec::with_capacity(out_w as usize * out_h as usize * n_ch);
    for y in 0..out_h as usize {
        let (y0, y1, ty) = (ys.lo[y], ys.hi[y], ys.t[y]);
        for x in 0..out_w as usize {
            let (x0, x1, tx) = (xs.lo[x], xs.hi[x], xs.t[x]);
            for ch in 0..n_ch {
                let p00 = image.sample(x0, y0, ch) as f64;
                let p10 = image.sample(x1, y0, ch) as f64;
                let p01 = image.sample(x0, y1, ch) as f64;
                let p11 = image.sample(x1, y1, ch) as f64;
                let value = lerp(lerp(p00, p10, tx), lerp(p01, p11, tx), ty);
                samples.push(clamp_round(value));
            }
        }
    }
    Ok(ImageBuffer::new(out_w, out_h, image.channels(), samples)
        .expect("samples generated to layout"))
}

/// Mask counterpart of [`scale`]: nearest-neighbor on the same inverse
/// mapping, with the source index rounded and clamped to the image.
pub fn scale_mask(mask: &BinaryMask, factor: f64) -> Result<BinaryMask, GeometricError> {
    let (out_w, out_h) = scaled_dims(mask.width(), mask.height(), factor)?;
    let last_x = mask.width() as i64 - 1;
    let last_y = mask.height() as i64 - 1;
    let nearest = |d: u32, last: i64| -> u32 {
        let s = (d as f64 + 0.5) / factor - 0.5;
        (s.round() as i64).clamp(0, last) as u32
    };
    let xs: Vec<u32> = (0..out_w).map(|d| nearest(d, last_x)).collect();
    let ys: Vec<u32> = (0..out_h).map(|d| nearest(d, last_y)).collect();
    let mut samples = Vec::with_capacity(out_w as usize * out_h as usize);
    for &sy in &ys {
        for &sx in &xs {
            samples.push(mask.sample(sx, sy));
        }
    }
    Ok(BinaryMask::new(out_w, out_h, samples).expect("nearest sampling preserves binary values"))
}

/// Horizontal shear: output `(x, y)` samples the source at `x - k * y` on
/// the same row, interpolating between the two straddling pixels. Source
/// coordinates outside the image produce `fill`. Row 0 is always copied
/// unchanged.
pub fn shear_horizontal(image: &ImageBuffer, k: f64, fill: u8) -> ImageBuffer {
    let w = image.width();
    let last = (w - 1) as f64;
    let n_ch = image.channels().count();
    let mut samples = Vec::with_capacity(image.pixel_count() * n_ch);
    for y in 0..image.height() {
        let offset = k * y as f64;
        for x in 0..w {
            let sx = x as f64 - offset;
            if sx < 0.0 || sx > last {
                samples.extend(std::iter::repeat(fill).take(n_ch));
                continue;
            }
            let floor = sx.floor();
            let tx = sx - floor;
            let x0 = floor as u32;
            let x1 = (x0 + 1).min(w - 1);
            for ch in 0..n_ch {
                let a = image.sample(x0, y, ch) as f64;
                let b = image.sample(x1, y, ch) as f64;
                samples.push(clamp_round(lerp(a, b, tx)));
            }
        }
    }
    ImageBuffer::new(w, image.height(), image.channels(), samples)
        .expect("samples generated to layout")
}

/// Mask counterpart of [`shear_horizontal`]: nearest-neighbor along the row,
/// background outside the image.
pub fn shear_horizontal_mask(mask: &BinaryMask, k: f64) -> BinaryMask {
    let w = mask.width();
    let last = w as i64 - 1;
    BinaryMask::from_fn(w, mask.height(), |x, y| {
        let sx = x as f64 - k * y as f64;
        let idx = sx.round() as i64;
        if idx >= 0 && idx <= last {
            mask.sample(idx as u32, y) == 255
        } else {
            false
        }
    })
}

/// Extracts a centered window, offset `floor((dim - target) / 2)` per axis.
pub fn crop_center(
    image: &ImageBuffer,
    target_width: u32,
    target_height: u32,
) -> Result<ImageBuffer, GeometricError> {
    if target_width == 0 || target_height == 0 {
        return Err(GeometricError::EmptyTarget);
    }
    if target_width > image.width() || target_height > image.height() {
        return Err(GeometricError::TargetTooLarge {
            target_width,
            target_height,
            width: image.width(),
            height: image.height(),
        });
    }
    let ox = (image.width() - target_width) / 2;
    let oy = (image.height() - target_height) / 2;
    Ok(ImageBuffer::from_fn(
        target_width,
        target_height,
        image.channels(),
        |x, y, ch| image.sample(x + ox, y + oy, ch),
    ))
}

/// Mask counterpart of [`crop_center`].
pub fn crop_center_mask(
    mask: &BinaryMask,
    target_width: u32,
    target_height: u32,
) -> Result<BinaryMask, GeometricError> {
    let cropped = crop_center(&mask.to_image(), target_width, target_height)?;
    Ok(BinaryMask::from_image(&cropped).expect("crop preserves values"))
}
