//! Detection average precision with face-size buckets.
//!
//! Matching is greedy in processing order (confidence descending): each
//! prediction takes the still-unmatched ground-truth face with the highest
//! box IoU at or above the threshold; ties go to the earlier ground truth.
//! AP is the area under the monotone precision envelope of the
//! precision/recall curve, integrated at every recall step. Predictions
//! sharing a confidence value form one operating point.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::detection::{count_noa, processing_order, DetectionManifest, FaceDetection};
use crate::error::{Error, Result};
use crate::geometry::SizeCategory;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// IoU thresholds 0.50, 0.55, ..., 0.95.
pub fn coco_iou_thresholds() -> Vec<f64> {
    (0..10).map(|i| (50 + 5 * i) as f64 / 100.0).collect()
}

/// True-positive flag per prediction, in processing order.
fn greedy_match(gt: &[FaceDetection], pred: &[FaceDetection], iou_threshold: f64) -> Vec<bool> {
    let mut matched = vec![false; gt.len()];
    pred.iter()
        .map(|p| {
            let mut best: Option<(usize, f64)> = None;
            for (g, gt_face) in gt.iter().enumerate() {
                if matched[g] {
                    continue;
                }
                let iou = p.bbox.iou(&gt_face.bbox);
                if iou >= iou_threshold && best.is_none_or(|(_, b)| iou > b) {
                    best = Some((g, iou));
                }
            }
            match best {
                Some((g, _)) => {
                    matched[g] = true;
                    true
                }
                None => false,
            }
        })
        .collect()
}

fn sorted(faces: &[FaceDetection]) -> Vec<FaceDetection> {
    let mut v = faces.to_vec();
    v.sort_by(processing_order);
    v
}

/// Average precision of `pred` against `gt` at one IoU threshold. `None`
/// when there is no ground truth.
pub fn match_and_ap(
    gt: &[FaceDetection],
    pred: &[FaceDetection],
    iou_threshold: f64,
) -> Option<f64> {
    if gt.is_empty() {
        return None;
    }
    let gt = sorted(gt);
    let pred = sorted(pred);
    let tp = greedy_match(&gt, &pred, iou_threshold);

    // operating points at the end of each run of equal confidence
    let mut recall = Vec::new();
    let mut precision = Vec::new();
    let (mut tps, mut seen) = (0usize, 0usize);
    for (i, p) in pred.iter().enumerate() {
        seen += 1;
        if tp[i] {
            tps += 1;
        }
        let last_of_run = pred.get(i + 1).is_none_or(|n| n.confidence != p.confidence);
        if last_of_run {
            recall.push(tps as f64 / gt.len() as f64);
            precision.push(tps as f64 / seen as f64);
        }
    }

    for i in (0..precision.len().saturating_sub(1)).rev() {
        precision[i] = precision[i].max(precision[i + 1]);
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (r, p) in recall.iter().zip(&precision) {
        ap += (r - prev_recall) * p;
        prev_recall = *r;
    }
    Some(ap)
}

/// Size bucket a prediction is scored in: that of its best-overlapping
/// ground truth, or its own size when it overlaps none.
fn prediction_bucket(p: &FaceDetection, gt: &[FaceDetection]) -> SizeCategory {
    let mut best: Option<(f64, SizeCategory)> = None;
    for g in gt {
        let iou = p.bbox.iou(&g.bbox);
        if iou > 0.0 && best.is_none_or(|(b, _)| iou > b) {
            best = Some((iou, g.size_category()));
        }
    }
    best.map_or_else(|| p.size_category(), |(_, c)| c)
}

/// Mean AP over `thresholds` for one image; `None` without ground truth.
fn image_ap(gt: &[FaceDetection], pred: &[FaceDetection], thresholds: &[f64]) -> Option<f64> {
    let aps: Vec<f64> = thresholds
        .iter()
        .filter_map(|&t| match_and_ap(gt, pred, t))
        .collect();
    (!aps.is_empty()).then(|| aps.iter().sum::<f64>() / aps.len() as f64)
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetEvalReport {
    pub schema_version: u32,
    pub iou_thresholds: Vec<f64>,
    pub map: Option<f64>,
    pub map_s: Option<f64>,
    pub map_m: Option<f64>,
    pub map_l: Option<f64>,
    pub noa: usize,
    pub gt_faces: usize,
    pub gt_faces_s: usize,
    pub gt_faces_m: usize,
    pub gt_faces_l: usize,
    pub images: usize,
    pub images_with_gt: usize,
}

impl DetEvalReport {
    pub fn bucket(&self, c: SizeCategory) -> Option<f64> {
        match c {
            SizeCategory::Small => self.map_s,
            SizeCategory::Medium => self.map_m,
            SizeCategory::Large => self.map_l,
        }
    }
}

/// Lists image paths present in exactly one of the two manifests.
pub fn image_set_difference(a: &DetectionManifest, b: &DetectionManifest) -> Vec<String> {
    let sa: BTreeSet<&str> = a.entries.iter().map(|e| e.image_path.as_str()).collect();
    let sb: BTreeSet<&str> = b.entries.iter().map(|e| e.image_path.as_str()).collect();
    sa.symmetric_difference(&sb)
        .map(|s| s.to_string())
        .collect()
}

/// mAP over the dataset: per-image AP averaged over `thresholds`, then over
/// images that have ground truth. Bucketed variants keep only ground truth
/// of that size and ignore predictions belonging to another bucket.
pub fn evaluate_detection(
    gt: &DetectionManifest,
    pred: &DetectionManifest,
    thresholds: &[f64],
) -> Result<DetEvalReport> {
    if thresholds.is_empty() || thresholds.iter().any(|t| !(*t > 0.0 && *t <= 1.0)) {
        return Err(Error::Evaluation(format!(
            "IoU thresholds must lie in (0, 1]: {thresholds:?}"
        )));
    }
    let diff = image_set_difference(gt, pred);
    if !diff.is_empty() {
        return Err(Error::Evaluation(format!(
            "manifests cover different images: {}",
            diff.join(", ")
        )));
    }

    let mut all = Vec::new();
    let mut buckets: [Vec<f64>; 3] = Default::default();
    let mut bucket_gt = [0usize; 3];
    for g in &gt.entries {
        let p = pred.entry(&g.image_path).expect("image sets checked");
        if let Some(ap) = image_ap(&g.faces, &p.faces, thresholds) {
            all.push(ap);
        }
        for (bi, cat) in SizeCategory::ALL.iter().enumerate() {
            let gt_b: Vec<FaceDetection> = g
                .faces
                .iter()
                .copied()
                .filter(|f| f.size_category() == *cat)
                .collect();
            if gt_b.is_empty() {
                continue;
            }
            bucket_gt[bi] += gt_b.len();
            let pred_b: Vec<FaceDetection> = p
                .faces
                .iter()
                .copied()
                .filter(|f| prediction_bucket(f, &g.faces) == *cat)
                .collect();
            if let Some(ap) = image_ap(&gt_b, &pred_b, thresholds) {
                buckets[bi].push(ap);
            }
        }
    }

    Ok(DetEvalReport {
        schema_version: REPORT_SCHEMA_VERSION,
        iou_thresholds: thresholds.to_vec(),
        map: mean(&all),
        map_s: mean(&buckets[0]),
        map_m: mean(&buckets[1]),
        map_l: mean(&buckets[2]),
        noa: count_noa(pred),
        gt_faces: gt.face_count(),
        gt_faces_s: bucket_gt[0],
        gt_faces_m: bucket_gt[1],
        gt_faces_l: bucket_gt[2],
        images: gt.entries.len(),
        images_with_gt: all.len(),
    })
}
