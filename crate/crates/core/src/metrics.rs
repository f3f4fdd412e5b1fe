//! Segmentation overlap and binary classification metrics.

use serde::Serialize;
use thiserror::Error;

use crate::raster::{BinaryMask, Channels, ImageBuffer, RasterError};

/// Errors raised by metric computations.
#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error("item {item}: {source}")]
    ItemDimensionMismatch { item: String, source: RasterError },
    #[error("evaluation set is empty")]
    EmptyEvaluationSet,
    #[error("label lists differ in length: {predictions} predictions vs {truths} truths")]
    LengthMismatch { predictions: usize, truths: usize },
    #[error("label lists are empty")]
    EmptyInput,
}

/// Counts for a two-class confusion matrix, with foreground as positive.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix2 {
    pub true_positives: u64,
    pub false_positives: u64,
    pub false_negatives: u64,
    pub true_negatives: u64,
}

impl ConfusionMatrix2 {
    pub fn total(&self) -> u64 {
        self.true_positives + self.false_positives + self.false_negatives + self.true_negatives
    }
}

/// One evaluated prediction/truth mask pair, identified for reporting.
#[derive(Debug, Clone)]
pub struct EvalPair {
    pub id: String,
    pub prediction: BinaryMask,
    pub truth: BinaryMask,
}

/// Per-item Dice scores plus their unweighted mean.
#[derive(Debug, Clone, Serialize)]
pub struct DiceReport {
    pub items: Vec<DiceItem>,
    pub mean_dice: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiceItem {
    pub id: String,
    pub dice: f64,
}

/// Dice overlap `2 |A n B| / (|A| + |B|)` between two foreground sets.
///
/// Two empty masks score 1.0: predicting nothing where nothing exists is a
/// perfect match, not a degenerate one.
pub fn dice(prediction: &BinaryMask, truth: &BinaryMask) -> Result<f64, MetricsError> {
    crate::raster::check_same_dims(
        prediction.width(),
        prediction.height(),
        truth.width(),
        truth.height(),
    )?;
    let mut intersection = 0u64;
    let mut pred_size = 0u64;
    let mut truth_size = 0u64;
    for (&p, &t) in prediction.samples().iter().zip(truth.samples()) {
        let p = p == 255;
        let t = t == 255;
        intersection += (p && t) as u64;
        pred_size += p as u64;
        truth_size += t as u64;
    }
    if pred_size + truth_size == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * intersection as f64 / (pred_size + truth_size) as f64)
}

/// Evaluates every pair and averages the per-item scores (each item counts
/// equally regardless of image area).
pub fn mean_dice(pairs: &[EvalPair]) -> Result<DiceReport, MetricsError> {
    if pairs.is_empty() {
        return Err(MetricsError::EmptyEvaluationSet);
    }
    let mut items = Vec::with_capacity(pairs.len());
    let mut sum = 0.0;
    for pair in pairs {
        let score =
            dice(&pair.prediction, &pair.truth).map_err(|err| match err {
                MetricsError::Raster(source) => MetricsError::ItemDimensionMismatch {
                    item: pair.id.clone(),
                    source,
                },
                other => other,
            })?;
        sum += score;
        items.push(DiceItem {
            id: pair.id.clone(),
            dice: score,
        });
    }
    Ok(DiceReport {
        mean_dice: sum / pairs.len() as f64,
        items,
    })
}

/// Thresholds a grayscale score map into a mask: samples `>= threshold`
/// become foreground.
pub fn binarize_prediction(
    scores: &ImageBuffer,
    threshold: u8,
) -> Result<BinaryMask, MetricsError> {
    scores.require_channels(Channels::Gray)?;
    let samples = scores
        .samples()
        .iter()
        .map(|&v| if v >= threshold { 255u8 } else { 0u8 })
        .collect();
    Ok(BinaryMask::new(scores.width(), scores.height(), samples)
        .expect("threshold output is binary"))
}

/// Tallies a confusion matrix over paired binary labels and returns it with
/// the accuracy `(TP + TN) / total`.
pub fn confusion_and_accuracy(
    predictions: &[bool],
    truths: &[bool],
) -> Result<(ConfusionMatrix2, f64), MetricsError> {
    if predictions.len() != truths.len() {
        return Err(MetricsError::LengthMismatch {
            predictions: predictions.len(),
            truths: truths.len(),
        });
    }
    if predictions.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut matrix = ConfusionMatrix2::default();
    for (&p, &t) in predictions.iter().zip(truths) {
        match (p, t) {
            (true, true) => matrix.true_positives += 1,
            (true, false) => matrix.false_positives += 1,
            (false, true) => matrix.false_negatives += 1,
            (false, false) => matrix.true_negatives += 1,
        }
    }
    let accuracy = (matrix.true_positives + matrix.true_negatives) as f64 / matrix.total() as f64;
    Ok((matrix, accuracy))
}
