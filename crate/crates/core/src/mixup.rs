//! Mask-aware mixup: convex blending of image pairs.
//!
//! Two modes are provided. Global mode blends both images everywhere and
//! carries a fractional `soft_mask` holding the blended foreground weight.
//! Composite mode blends only where the first pair's mask is foreground and
//! copies the second image elsewhere, which grafts one lesion onto another
//! scene while keeping the background intact.
//!
//! Blend weights are derived once per pair as the complement-canonical pair
//! `(1 - (1 - lambda), 1 - lambda)`. The correction is at most one unit in
//! the last place, and it makes swapping the inputs together with
//! `lambda -> 1 - lambda` reproduce the identical products, so global mode
//! is symmetric bit for bit.

use rayon::prelude::*;
use thiserror::Error;

use crate::raster::{clamp_round, BinaryMask, ImageBuffer, RasterError, SamplePair};
use crate::rng::{RngError, RngStream};

/// Errors raised by the mixing operations.
#[derive(Debug, Error, PartialEq)]
pub enum MixupError {
    #[error("lambda must lie in [0, 1], got {0}")]
    InvalidLambda(f64),
    #[error("mixing needs at least 2 source pairs, got {0}")]
    DatasetTooSmall(usize),
    #[error(
        "pair {index} is {width}x{height}, expected {expected_width}x{expected_height} \
         like the rest of the set"
    )]
    HeterogeneousDims {
        index: usize,
        width: u32,
        height: u32,
        expected_width: u32,
        expected_height: u32,
    },
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error(transparent)]
    Sampler(#[from] RngError),
}

/// How a pair of samples is combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MixupMode {
    Global,
    Composite,
}

impl MixupMode {
    pub fn name(self) -> &'static str {
        match self {
            MixupMode::Global => "global",
            MixupMode::Composite => "composite",
        }
    }
}

/// One mixed sample: blended image, thresholded mask, and the fractional
/// foreground weights the threshold was applied to.
#[derive(Debug, Clone, PartialEq)]
pub struct MixupResult {
    pub image: ImageBuffer,
    pub mask: BinaryMask,
    /// Per-pixel foreground weight in `[0, 1]`, row-major.
    pub soft_mask: Vec<f64>,
    pub lambda: f64,
    /// Indices of the two sources in the originating set; direct
    /// two-sample calls report `(0, 1)`.
    pub source_ids: (usize, usize),
    pub mode: MixupMode,
}

/// Canonical weight pair for a blend: `(toward_a, toward_b)`.
///
/// `toward_b` is `1 - lambda`; `toward_a` is recomputed as the complement of
/// `toward_b` so that the swapped call sees exactly the same two values.
fn blend_weights(lambda: f64) -> Result<(f64, f64), MixupError> {
    if !lambda.is_finite() || !(0.0..=1.0).contains(&lambda) {
        return Err(MixupError::InvalidLambda(lambda));
    }
    let toward_b = 1.0 - lambda;
    let toward_a = 1.0 - toward_b;
    Ok((toward_a, toward_b))
}

fn check_pair_dims(a: &SamplePair, b: &SamplePair) -> Result<(), MixupError> {
    crate::raster::check_same_dims(a.width(), a.height(), b.width(), b.height())?;
    a.image.require_channels(b.image.channels())?;
    Ok(())
}

fn threshold_soft_mask(width: u32, height: u32, soft: &[f64]) -> BinaryMask {
    let samples = soft
        .iter()
        .map(|&w| if w >= 0.5 { 255u8 } else { 0u8 })
        .collect();
    BinaryMask::new(width, height, samples).expect("threshold output is binary")
}

/// Blends two sample pairs everywhere: `image = lambda * a + (1 - lambda) * b`
/// per channel, `soft_mask = lambda * Fa + (1 - lambda) * Fb` with masks read
/// as 0/1, and `mask = 255` wherever the soft mask reaches one half.
///
/// `lambda = 1` reproduces `a` and `lambda = 0` reproduces `b`, bit for bit.
pub fn mixup_global(
    a: &SamplePair,
    b: &SamplePair,
    lambda: f64,
) -> Result<MixupResult, MixupError> {
    check_pair_dims(a, b)?;
    let (wa, wb) = blend_weights(lambda)?;
    let samples = a
        .image
        .samples()
        .iter()
        .zip(b.image.samples())
        .map(|(&pa, &pb)| clamp_round(wa * pa as f64 + wb * pb as f64))
        .collect();
    let image = ImageBuffer::new(a.width(), a.height(), a.image.channels(), samples)?;
    let soft_mask: Vec<f64> = a
        .mask
        .samples()
        .iter()
        .zip(b.mask.samples())
        .map(|(&ma, &mb)| {
            let fa = (ma == 255) as u8 as f64;
            let fb = (mb == 255) as u8 as f64;
            wa * fa + wb * fb
        })
        .collect();
    let mask = threshold_soft_mask(a.width(), a.height(), &soft_mask);
    Ok(MixupResult {
        image,
        mask,
        soft_mask,
        lambda,
        source_ids: (0, 1),
        mode: MixupMode::Global,
    })
}

/// Blends only inside `a`'s foreground and copies `b` elsewhere.
///
/// The soft mask is `max(lambda * Fa, Fb)`: the grafted region carries the
/// blend weight, and `b`'s own foreground always survives at full strength.
pub fn mixup_composite(
    a: &SamplePair,
    b: &SamplePair,
    lambda: f64,
) -> Result<MixupResult, MixupError> {
    check_pair_dims(a, b)?;
    let (wa, wb) = blend_weights(lambda)?;
    let channels = a.image.channels().count();
    let mut samples = Vec::with_capacity(a.image.samples().len());
    for (pixel_index, &ma) in a.mask.samples().iter().enumerate() {
        let base = pixel_index * channels;
        let pa = &a.image.samples()[base..base + channels];
        let pb = &b.image.samples()[base..base + channels];
        if ma == 255 {
            for ch in 0..channels {
                samples.push(clamp_round(wa * pa[ch] as f64 + wb * pb[ch] as f64));
            }
        } else {
            samples.extend_from_slice(pb);
        }
    }
    let image = ImageBuffer::new(a.width(), a.height(), a.image.channels(), samples)?;
    let soft_mask: Vec<f64> = a
        .mask
        .samples()
        .iter()
        .zip(b.mask.samples())
        .map(|(&ma, &mb)| {
            let fa = (ma == 255) as u8 as f64;
            let fb = (mb == 255) as u8 as f64;
            (wa * fa).max(fb)
        })
        .collect();
    let mask = threshold_soft_mask(a.width(), a.height(), &soft_mask);
    Ok(MixupResult {
        image,
        mask,
        soft_mask,
        lambda,
        source_ids: (0, 1),
        mode: MixupMode::Composite,
    })
}

/// Generates `count` mixed pairs from a homogeneous dataset.
///
/// Generation `k` owns the stream `(master_seed, k)` and draws, in order:
/// the first source index as `floor(u * n)`, the second the same way
/// redrawn until distinct, then `lambda` from Beta(alpha, alpha). Each
/// generation is independent of the others, so the work is distributed
/// across threads without affecting results; the output is in `k` order.
pub fn generate_mixup_set(
    dataset: &[SamplePair],
    count: u64,
    alpha: f64,
    mode: MixupMode,
    master_seed: u64,
) -> Result<Vec<MixupResult>, MixupError> {
    if dataset.len() < 2 {
        return Err(MixupError::DatasetTooSmall(dataset.len()));
    }
    let (expected_width, expected_height) = (dataset[0].width(), dataset[0].height());
    for (index, pair) in dataset.iter().enumerate() {
        if pair.width() != expected_width || pair.height() != expected_height {
            return Err(MixupError::HeterogeneousDims {
                index,
                width: pair.width(),
                height: pair.height(),
                expected_width,
                expected_height,
            });
        }
    }
    if !alpha.is_finite() || alpha <= 0.0 || alpha > 1.0 {
        return Err(MixupError::Sampler(RngError::InvalidAlpha(alpha)));
    }
    let n = dataset.len();
    (0..count)
        .into_par_iter()
        .map(|k| {
            let mut stream = RngStream::derive(master_seed, k);
            let first = (stream.next_uniform() * n as f64) as usize;
            let mut second = (stream.next_uniform() * n as f64) as usize;
            while second == first {
                second = (stream.next_uniform() * n as f64) as usize;
            }
            let lambda = stream.sample_beta(alpha)?;
            let mut result = match mode {
                MixupMode::Global => mixup_global(&dataset[first], &dataset[second], lambda)?,
                MixupMode::Composite => {
                    mixup_composite(&dataset[first], &dataset[second], lambda)?
                }
            };
            result.source_ids = (first, second);
            Ok(result)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::Channels;

    fn pair_from(image_samples: Vec<u8>, mask_samples: Vec<u8>, w: u32, h: u32) -> SamplePair {
        SamplePair::new(
            ImageBuffer::new(w, h, Channels::Gray, image_samples).unwrap(),
            BinaryMask::new(w, h, mask_samples).unwrap(),
        )
        .unwrap()
    }

    fn random_pair(w: u32, h: u32, seed: u64) -> SamplePair {
        let mut stream = RngStream::derive(seed, 0);
        let image = ImageBuffer::from_fn(w, h, Channels::Gray, |_, _, _| {
            (stream.next_uniform() * 256.0) as u8
        });
        let mask = BinaryMask::from_fn(w, h, |_, _| stream.next_uniform() < 0.4);
        SamplePair::new(image, mask).unwrap()
    }

    #[test]
    fn lambda_endpoints_reproduce_sources_exactly() {
        let a = random_pair(9, 7, 1);
        let b = random_pair(9, 7, 2);
        let keep_a = mixup_global(&a, &b, 1.0).unwrap();
        assert_eq!(keep_a.image, a.image);
        assert_eq!(keep_a.mask, a.mask);
        let keep_b = mixup_global(&a, &b, 0.0).unwrap();
        assert_eq!(keep_b.image, b.image);
        assert_eq!(keep_b.mask, b.mask);
    }

    #[test]
    fn half_blend_matches_hand_example() {
        let a = pair_from(vec![100], vec![255], 1, 1);
        let b = pair_from(vec![200], vec![0], 1, 1);
        let mixed = mixup_global(&a, &b, 0.5).unwrap();
        assert_eq!(mixed.image.samples(), &[150]);
        assert_eq!(mixed.soft_mask, vec![0.5]);
        // The half threshold is inclusive, so the pixel counts as foreground.
        assert_eq!(mixed.mask.samples(), &[255]);
    }

    #[test]
    fn global_mode_is_symmetric_bit_for_bit() {
        let a = random_pair(16, 16, 3);
        let b = random_pair(16, 16, 4);
        let mut awkward = vec![0.1, 0.3, 0.5, 0.7331, 1.0 / 3.0];
        let mut stream = RngStream::derive(42, 0);
        for _ in 0..20 {
            awkward.push(stream.sample_beta(0.4).unwrap());
        }
        for lambda in awkward {
            let forward = mixup_global(&a, &b, lambda).unwrap();
            let swapped = mixup_global(&b, &a, 1.0 - lambda).unwrap();
            assert_eq!(forward.image, swapped.image, "lambda {lambda}");
            assert_eq!(forward.mask, swapped.mask, "lambda {lambda}");
            let soft_bits_equal = forward
                .soft_mask
                .iter()
                .zip(&swapped.soft_mask)
                .all(|(x, y)| x.to_bits() == y.to_bits());
            assert!(soft_bits_equal, "soft masks diverged at lambda {lambda}");
        }
    }

    #[test]
    fn blended_samples_stay_between_sources() {
        let a = random_pair(12, 12, 5);
        let b = random_pair(12, 12, 6);
        let mut stream = RngStream::derive(7, 0);
        for _ in 0..10 {
            let lambda = stream.sample_beta(0.4).unwrap();
            let mixed = mixup_global(&a, &b, lambda).unwrap();
            for ((&pa, &pb), &out) in a
                .image
                .samples()
                .iter()
                .zip(b.image.samples())
                .zip(mixed.image.samples())
            {
                let lo = pa.min(pb).saturating_sub(1);
                let hi = pa.max(pb).saturating_add(1);
                assert!(out >= lo && out <= hi);
            }
        }
    }

    #[test]
    fn mixed_mask_thresholds_soft_weights() {
        let a = random_pair(10, 10, 8);
        let b = random_pair(10, 10, 9);
        let mixed = mixup_global(&a, &b, 0.61).unwrap();
        for (&soft, &hard) in mixed.soft_mask.iter().zip(mixed.mask.samples()) {
            assert_eq!(hard == 255, soft >= 0.5);
            assert!((0.0..=1.0).contains(&soft));
        }
    }

    #[test]
    fn composite_copies_background_exactly() {
        let a = pair_from(vec![10, 20, 30, 40], vec![255, 0, 0, 255], 2, 2);
        let b = pair_from(vec![90, 80, 70, 60], vec![0, 255, 0, 0], 2, 2);
        let mixed = mixup_composite(&a, &b, 0.3).unwrap();
        // Blends at a's foreground: 0.3 * 10 + 0.7 * 90 = 66, 0.3 * 40 + 0.7 * 60 = 54.
        assert_eq!(mixed.image.samples(), &[66, 80, 70, 54]);
        // Soft mask: max(wa * Fa, Fb), with wa the canonical weight
        // 1 - (1 - lambda) rather than lambda itself.
        let wa = 1.0 - (1.0 - 0.3);
        assert_eq!(mixed.soft_mask, vec![wa, 1.0, 0.0, wa]);
        assert_eq!(mixed.mask.samples(), &[0, 255, 0, 0]);
    }

    #[test]
    fn composite_with_empty_overlay_returns_base() {
        let a = pair_from(vec![50; 9], vec![0; 9], 3, 3);
        let b = random_pair(3, 3, 10);
        let mixed = mixup_composite(&a, &b, 0.8).unwrap();
        assert_eq!(mixed.image, b.image);
        assert_eq!(mixed.mask, b.mask);
    }

    #[test]
    fn composite_full_overlay_at_lambda_one_keeps_a_pixels() {
        let a = pair_from(vec![11, 22, 33, 44], vec![255; 4], 2, 2);
        let b = pair_from(vec![90, 80, 70, 60], vec![0, 255, 0, 0], 2, 2);
        let mixed = mixup_composite(&a, &b, 1.0).unwrap();
        assert_eq!(mixed.image, a.image);
        // Union of foregrounds: a covers everything.
        assert_eq!(mixed.mask.samples(), &[255; 4]);
    }

    #[test]
    fn mismatched_dims_are_rejected() {
        let a = random_pair(4, 4, 11);
        let b = random_pair(5, 4, 12);
        assert!(matches!(
            mixup_global(&a, &b, 0.5),
            Err(MixupError::Raster(RasterError::DimensionMismatch { .. }))
        ));
    }

    #[test]
    fn out_of_range_lambda_is_rejected() {
        let a = random_pair(4, 4, 13);
        let b = random_pair(4, 4, 14);
        assert_eq!(
            mixup_global(&a, &b, 1.5).unwrap_err(),
            MixupError::InvalidLambda(1.5)
        );
        assert!(mixup_global(&a, &b, f64::NAN).is_err());
    }

    #[test]
    fn four_by_four_oracle_both_modes() {
        // Brute-force recomputation of every output value.
        let a = random_pair(4, 4, 15);
        let b = random_pair(4, 4, 16);
        let lambda = 0.37;
        let wb = 1.0 - lambda;
        let wa = 1.0 - wb;
        let global = mixup_global(&a, &b, lambda).unwrap();
        let composite = mixup_composite(&a, &b, lambda).unwrap();
        for y in 0..4 {
            for x in 0..4 {
                let pa = a.image.sample(x, y, 0) as f64;
                let pb = b.image.sample(x, y, 0) as f64;
                let fa = (a.mask.sample(x, y) == 255) as u8 as f64;
                let fb = (b.mask.sample(x, y) == 255) as u8 as f64;
                assert_eq!(
                    global.image.sample(x, y, 0),
                    clamp_round(wa * pa + wb * pb)
                );
                let soft = wa * fa + wb * fb;
                assert_eq!(global.soft_mask[(y * 4 + x) as usize], soft);
                assert_eq!(global.mask.sample(x, y) == 255, soft >= 0.5);
                let expected_composite = if fa == 1.0 {
                    clamp_round(wa * pa + wb * pb)
                } else {
                    pb as u8
                };
                assert_eq!(composite.image.sample(x, y, 0), expected_composite);
                let soft_c = (wa * fa).max(fb);
                assert_eq!(composite.soft_mask[(y * 4 + x) as usize], soft_c);
                assert_eq!(composite.mask.sample(x, y) == 255, soft_c >= 0.5);
            }
        }
    }

    #[test]
    fn generation_is_deterministic_and_ordered() {
        let dataset: Vec<SamplePair> = (0..6).map(|i| random_pair(8, 8, 100 + i)).collect();
        let a = generate_mixup_set(&dataset, 20, 0.4, MixupMode::Global, 42).unwrap();
        let b = generate_mixup_set(&dataset, 20, 0.4, MixupMode::Global, 42).unwrap();
        assert_eq!(a.len(), 20);
        assert_eq!(a, b);
        let other_seed = generate_mixup_set(&dataset, 20, 0.4, MixupMode::Global, 43).unwrap();
        assert_ne!(a, other_seed);
    }

    #[test]
    fn generation_draws_distinct_sources() {
        let dataset: Vec<SamplePair> = (0..3).map(|i| random_pair(6, 6, 200 + i)).collect();
        for result in generate_mixup_set(&dataset, 200, 0.4, MixupMode::Global, 7).unwrap() {
            assert_ne!(result.source_ids.0, result.source_ids.1);
            assert!(result.source_ids.0 < 3 && result.source_ids.1 < 3);
            assert!((0.0..=1.0).contains(&result.lambda));
        }
    }

    #[test]
    fn generation_source_usage_is_roughly_uniform() {
        let n = 10usize;
        let generations = 10_000u64;
        let dataset: Vec<SamplePair> = (0..n).map(|i| random_pair(4, 4, 300 + i as u64)).collect();
        let results = generate_mixup_set(&dataset, generations, 0.4, MixupMode::Global, 42).unwrap();
        let mut counts = vec![0u64; n];
        for r in &results {
            counts[r.source_ids.0] += 1;
            counts[r.source_ids.1] += 1;
        }
        let expected = 2.0 / n as f64;
        for (index, &count) in counts.iter().enumerate() {
            let freq = count as f64 / generations as f64;
            let relative = (freq - expected).abs() / expected;
            assert!(relative <= 0.10, "index {index}: freq {freq}");
        }
    }

    #[test]
    fn degenerate_lambda_may_reproduce_a_source() {
        // Draws near the Beta(0.4, 0.4) endpoints quantize to a plain copy;
        // any exact reproduction must coincide with such a draw.
        let dataset: Vec<SamplePair> = (0..4).map(|i| random_pair(8, 8, 400 + i)).collect();
        let results = generate_mixup_set(&dataset, 300, 0.4, MixupMode::Global, 11).unwrap();
        for r in results {
            let copy_of_a = r.image == dataset[r.source_ids.0].image;
            let copy_of_b = r.image == dataset[r.source_ids.1].image;
            if copy_of_a {
                assert!(r.lambda > 0.98, "unexpected copy at lambda {}", r.lambda);
            }
            if copy_of_b {
                assert!(r.lambda < 0.02, "unexpected copy at lambda {}", r.lambda);
            }
        }
    }

    #[test]
    fn small_or_ragged_datasets_are_rejected() {
        let one = vec![random_pair(4, 4, 500)];
        assert_eq!(
            generate_mixup_set(&one, 5, 0.4, MixupMode::Global, 1).unwrap_err(),
            MixupError::DatasetTooSmall(1)
        );
        let ragged = vec![random_pair(4, 4, 501), random_pair(5, 5, 502)];
        assert!(matches!(
            generate_mixup_set(&ragged, 5, 0.4, MixupMode::Global, 1).unwrap_err(),
            MixupError::HeterogeneousDims { index: 1, .. }
        ));
        let fine = vec![random_pair(4, 4, 503), random_pair(4, 4, 504)];
        assert!(matches!(
            generate_mixup_set(&fine, 5, 1.7, MixupMode::Global, 1).unwrap_err(),
            MixupError::Sampler(RngError::InvalidAlpha(_))
        ));
    }
}
