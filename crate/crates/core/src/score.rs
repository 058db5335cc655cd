//! Object-wise scoring: IoU matching of detections to truth objects,
//! precision/recall sweeps, AP and F1max, and confusion rendering.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::annotate::GroundTruthObject;
use crate::detect::DetectedObject;
use crate::error::{Error, Result};
use crate::grid::{GeoMeta, RgbRaster};
use crate::pixels::PixelSet;

pub const TP_COLOR: [u8; 3] = [0, 255, 0];
pub const FP_COLOR: [u8; 3] = [255, 0, 0];
pub const FN_COLOR: [u8; 3] = [255, 165, 0];
pub const BACKGROUND_COLOR: [u8; 3] = [0, 0, 0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoringParams {
    /// Minimum IoU for a detection to count as a true positive.
    pub iou_min: f64,
}

impl Default for ScoringParams {
    fn default() -> Self {
        Self { iou_min: 0.2 }
    }
}

impl ScoringParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.iou_min > 0.0 && self.iou_min <= 1.0) {
            return Err(Error::argument(format!(
                "iou_min must be in (0, 1], got {}",
                self.iou_min
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Match {
    pub pred_id: u32,
    pub truth_id: i64,
    pub iou: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub matches: Vec<Match>,
}

pub fn iou(a: &PixelSet, b: &PixelSet) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::argument("IoU of an empty pixel set"));
    }
    Ok(iou_unchecked(a, b))
}

fn iou_unchecked(a: &PixelSet, b: &PixelSet) -> f64 {
    let inter = a.intersection_len(b);
    if inter == 0 {
        return 0.0;
    }
    inter as f64 / (a.len() + b.len() - inter) as f64
}

/// Detection order for matching: confidence descending, then id ascending.
fn ranked(preds: &[DetectedObject]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| {
        preds[b]
            .confidence
            .total_cmp(&preds[a].confidence)
            .then(preds[a].id.cmp(&preds[b].id))
    });
    order
}

/// Greedy one-to-one assignment over `preds` in ranked order. Returns, for
/// each ranked prediction, the matched truth index and IoU.
///
/// A prediction takes the still-unmatched truth with the highest IoU (ties
/// go to the earlier truth) when that IoU reaches `iou_min`. Because the
/// assignment of a prediction never depends on lower-ranked ones, matching
/// any confidence-threshold prefix of the ranking gives the same result as
/// matching the full list and truncating.
fn greedy_assign(
    preds: &[DetectedObject],
    order: &[usize],
    truths: &[GroundTruthObject],
    iou_min: f64,
) -> Vec<Option<(usize, f64)>> {
    let mut taken = vec![false; truths.len()];
    order
        .iter()
        .map(|&p| {
            let mut best: Option<(usize, f64)> = None;
            for (t, truth) in truths.iter().enumerate() {
                if taken[t] {
                    continue;
                }
                let v = iou_unchecked(&preds[p].pixels, &truth.pixels);
                if v >= iou_min && best.is_none_or(|(_, b)| v > b) {
                    best = Some((t, v));
                }
            }
            if let Some((t, _)) = best {
                taken[t] = true;
            }
            best
        })
        .collect()
}

/// Matches the predictions with confidence `>= tau` against the truths.
pub fn match_detections(
    preds: &[DetectedObject],
    truths: &[GroundTruthObject],
    params: &ScoringParams,
    tau: f64,
) -> Confusion {
    let order: Vec<usize> = ranked(preds)
        .into_iter()
        .filter(|&p| preds[p].confidence >= tau)
        .collect();
    let assigned = greedy_assign(preds, &order, truths, params.iou_min);
    let matches: Vec<Match> = order
        .iter()
        .zip(&assigned)
        .filter_map(|(&p, a)| {
            a.map(|(t, iou)| Match {
                pred_id: preds[p].id,
                truth_id: truths[t].id,
                iou,
            })
        })
        .collect();
    Confusion {
        tp: matches.len(),
        fp: order.len() - matches.len(),
        fn_: truths.len() - matches.len(),
        matches,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredDetection {
    pub confidence: f64,
    pub true_positive: bool,
}

/// Per-detection outcomes pooled over any number of images. Merging is
/// associative and the resulting curve does not depend on merge order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DetectionTally {
    pub n_truth: usize,
    pub detections: Vec<ScoredDetection>,
}

impl DetectionTally {
    /// Scores one image: every prediction is labelled TP or FP by the greedy
    /// matching at the lowest threshold.
    pub fn from_image(
        preds: &[DetectedObject],
        truths: &[GroundTruthObject],
        params: &ScoringParams,
    ) -> Self {
        let order = ranked(preds);
        let assigned = greedy_assign(preds, &order, truths, params.iou_min);
        Self {
            n_truth: truths.len(),
            detections: order
                .iter()
                .zip(&assigned)
                .map(|(&p, a)| ScoredDetection {
                    confidence: preds[p].confidence,
                    true_positive: a.is_some(),
                })
                .collect(),
        }
    }

    pub fn merge(&mut self, other: &DetectionTally) {
        self.n_truth += other.n_truth;
        self.detections.extend_from_slice(&other.detections);
    }

    /// Sweeps the threshold over the distinct confidences, highest first.
    pub fn curve(&self) -> Result<PrCurve> {
        if self.n_truth == 0 {
            return Err(Error::argument("PR curve needs at least one truth object"));
        }
        let mut sorted = self.detections.clone();
        sorted.sort_by(|a, b| b.confidence.total_cmp(&a.confidence));
        let mut points = Vec::new();
        let (mut tp, mut fp) = (0usize, 0usize);
        let mut i = 0;
        while i < sorted.len() {
            let tau = sorted[i].confidence;
            while i < sorted.len() && sorted[i].confidence.total_cmp(&tau) == Ordering::Equal {
                if sorted[i].true_positive {
                    tp += 1;
                } else {
                    fp += 1;
                }
                i += 1;
            }
            points.push(PrPoint {
                tau,
                precision: precision(tp, fp),
                recall: tp as f64 / self.n_truth as f64,
            });
        }
        Ok(PrCurve::from_points(points, self.n_truth, sorted.len()))
    }
}

fn precision(tp: usize, fp: usize) -> f64 {
    if tp + fp == 0 {
        1.0
    } else {
        tp as f64 / (tp + fp) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub tau: f64,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrCurve {
    /// Points in strictly decreasing `tau`.
    pub points: Vec<PrPoint>,
    pub r_max: f64,
    pub ap: f64,
    pub f1_max: f64,
    pub n_truth: usize,
    pub n_pred: usize,
}

impl PrCurve {
    pub fn from_points(points: Vec<PrPoint>, n_truth: usize, n_pred: usize) -> Self {
        let r_max = points.last().map_or(0.0, |p| p.recall);
        Self {
            ap: average_precision(&points),
            f1_max: f1_max(&points),
            r_max,
            points,
            n_truth,
            n_pred,
        }
    }

    /// `tau,precision,recall` rows at 6 decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("tau,precision,recall\n");
        for p in &self.points {
            out.push_str(&format!(
                "{:.6},{:.6},{:.6}\n",
                p.tau, p.precision, p.recall
            ));
        }
        out
    }

    pub fn summary(&self, params: &ScoringParams) -> Summary {
        Summary {
            ap: round6(self.ap),
            f1_max: round6(self.f1_max),
            r_max: round6(self.r_max),
            iou_min: params.iou_min,
            n_truth: self.n_truth,
            n_pred: self.n_pred,
        }
    }
}

/// Summary metrics as written to `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub ap: f64,
    pub f1_max: f64,
    pub r_max: f64,
    pub iou_min: f64,
    pub n_truth: usize,
    pub n_pred: usize,
}

pub(crate) fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

/// PR curve for a single image's detections.
pub fn pr_curve(
    preds: &[DetectedObject],
    truths: &[GroundTruthObject],
    params: &ScoringParams,
) -> Result<PrCurve> {
    params.validate()?;
    DetectionTally::from_image(preds, truths, params).curve()
}

pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Maximum harmonic mean of precision and recall over the curve points.
pub fn f1_max(points: &[PrPoint]) -> f64 {
    points
        .iter()
        .map(|p| f1(p.precision, p.recall))
        .fold(0.0, f64::max)
}

/// Step integral of precision over recall from 0 up to the last point's
/// recall: `sum P_i * (R_i - R_{i-1})` with `R_0 = 0`.
pub fn average_precision(points: &[PrPoint]) -> f64 {
    let mut prev = 0.0;
    let mut ap = 0.0;
    for p in points {
        ap += p.precision * (p.recall - prev);
        prev = p.recall;
    }
    ap
}

/// Colors TP detections green, missed truths orange and FP detections red.
/// Where objects overlap, TP wins over FN which wins over FP.
pub fn render_confusion(
    preds: &[DetectedObject],
    truths: &[GroundTruthObject],
    params: &ScoringParams,
    tau: f64,
    meta: &GeoMeta,
) -> Result<RgbRaster> {
    let n = meta.len();
    let out_of_bounds = preds
        .iter()
        .map(|p| &p.pixels)
        .chain(truths.iter().map(|t| &t.pixels))
        .any(|s| s.max_index().is_some_and(|m| m >= n));
    if out_of_bounds {
        return Err(Error::argument(format!(
            "object pixels fall outside the {}x{} frame",
            meta.width, meta.height
        )));
    }

    let confusion = match_detections(preds, truths, params, tau);
    let matched_preds: Vec<u32> = confusion.matches.iter().map(|m| m.pred_id).collect();
    let matched_truths: Vec<i64> = confusion.matches.iter().map(|m| m.truth_id).collect();

    // 0 background, then ascending precedence FP < FN < TP
    let mut rank = vec![0u8; n];
    let mut paint = |pixels: &PixelSet, r: u8| {
        for i in pixels.iter() {
            rank[i] = rank[i].max(r);
        }
    };
    for p in preds.iter().filter(|p| p.confidence >= tau) {
        let r = if matched_preds.contains(&p.id) { 3 } else { 1 };
        paint(&p.pixels, r);
    }
    for t in truths.iter().filter(|t| !matched_truths.contains(&t.id)) {
        paint(&t.pixels, 2);
    }

    let mut raster = RgbRaster::new(meta.width, meta.height);
    for (i, &r) in rank.iter().enumerate() {
        let color = match r {
            3 => TP_COLOR,
            2 => FN_COLOR,
            1 => FP_COLOR,
            _ => continue,
        };
        raster.put(i, color);
    }
    Ok(raster)
}
