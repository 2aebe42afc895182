//! Brute-force reference computations, written independently of the library
//! code paths they check. Shared with the acceptance suite.

#![allow(dead_code)]

use anonypipe_core::{BoundingBox, FaceDetection};

/// Box overlap by explicit pixel-range intersection.
pub fn box_iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let iw = (a.x1.min(b.x1) - a.x0.max(b.x0)).max(0);
    let ih = (a.y1.min(b.y1) - a.y0.max(b.y0)).max(0);
    let inter = (iw * ih) as f64;
    if inter == 0.0 {
        return 0.0;
    }
    let area = |r: &BoundingBox| ((r.x1 - r.x0) * (r.y1 - r.y0)) as f64;
    inter / (area(a) + area(b) - inter)
}

fn rank(v: &mut [FaceDetection]) {
    v.sort_by(|a, b| {
        b.confidence
            .partial_cmp(&a.confidence)
            .unwrap()
            .then(a.bbox.y0.cmp(&b.bbox.y0))
            .then(a.bbox.x0.cmp(&b.bbox.x0))
            .then(a.bbox.y1.cmp(&b.bbox.y1))
            .then(a.bbox.x1.cmp(&b.bbox.x1))
    });
}

/// True positives among `pred` (all of which are kept).
fn true_positives(gt: &[FaceDetection], pred: &[FaceDetection], thr: f64) -> usize {
    let mut gt = gt.to_vec();
    rank(&mut gt);
    let mut pred = pred.to_vec();
    rank(&mut pred);
    let mut taken = vec![false; gt.len()];
    let mut tp = 0;
    for p in &pred {
        let mut best_iou = -1.0;
        let mut best = None;
        for (g, gf) in gt.iter().enumerate() {
            let iou = box_iou(&p.bbox, &gf.bbox);
            if !taken[g] && iou >= thr && iou > best_iou {
                best_iou = iou;
                best = Some(g);
            }
        }
        if let Some(g) = best {
            taken[g] = true;
            tp += 1;
        }
    }
    tp
}

/// AP by enumerating every confidence cutoff: each cutoff keeps the
/// predictions scoring at least that much and yields one (recall, precision)
/// point. AP integrates, over each recall increment, the best precision
/// reached at that recall or beyond.
pub fn ap_oracle(gt: &[FaceDetection], pred: &[FaceDetection], thr: f64) -> Option<f64> {
    if gt.is_empty() {
        return None;
    }
    let mut cutoffs: Vec<f64> = pred.iter().map(|p| p.confidence).collect();
    cutoffs.sort_by(|a, b| b.partial_cmp(a).unwrap());
    cutoffs.dedup();

    let points: Vec<(f64, f64)> = cutoffs
        .iter()
        .map(|&c| {
            let kept: Vec<FaceDetection> =
                pred.iter().copied().filter(|p| p.confidence >= c).collect();
            let tp = true_positives(gt, &kept, thr) as f64;
            (tp / gt.len() as f64, tp / kept.len() as f64)
        })
        .collect();

    let mut recalls: Vec<f64> = points.iter().map(|p| p.0).collect();
    recalls.sort_by(|a, b| a.partial_cmp(b).unwrap());
    recalls.dedup();
    let mut ap = 0.0;
    let mut prev = 0.0;
    for r in recalls {
        let best = points
            .iter()
            .filter(|p| p.0 >= r)
            .map(|p| p.1)
            .fold(0.0, f64::max);
        ap += (r - prev) * best;
        prev = r;
    }
    Some(ap)
}

/// iIoU by a per-pixel loop. `gt` uses the instance encoding
/// (`v >= 1000`: instance of class `v / 1000`).
pub fn iiou_oracle(gt: &[u32], pred: &[u32], class_id: u32, avg: f64) -> Option<f64> {
    let class = |v: u32| if v >= 1000 { v / 1000 } else { v };
    let (mut itp, mut ifn, mut fp) = (0.0, 0.0, 0.0);
    for i in 0..gt.len() {
        let g = gt[i];
        if class(g) == class_id {
            let size = gt.iter().filter(|&&v| v == g).count() as f64;
            let w = avg / size;
            if pred[i] == class_id {
                itp += w;
            } else {
                ifn += w;
            }
        } else if pred[i] == class_id {
            fp += 1.0;
        }
    }
    let d = itp + fp + ifn;
    (d > 0.0).then(|| itp / d)
}

/// Plain IoU by a per-pixel loop on class ids.
pub fn iou_oracle(gt: &[u32], pred: &[u32], class_id: u32) -> Option<f64> {
    let (mut tp, mut other) = (0.0, 0.0);
    for (g, p) in gt.iter().zip(pred) {
        let (a, b) = (*g == class_id, *p == class_id);
        if a && b {
            tp += 1.0;
        } else if a || b {
            other += 1.0;
        }
    }
    (tp + other > 0.0).then(|| tp / (tp + other))
}

/// Per-channel rounded tile means of a `w x h` RGB region, tiles of `p`
/// anchored at the origin. Returns the expected raster.
pub fn pixelate_oracle(data: &[u8], w: usize, h: usize, p: usize) -> Vec<u8> {
    let mut out = data.to_vec();
    let mut ty = 0;
    while ty < h {
        let mut tx = 0;
        while tx < w {
            let mut idx = Vec::new();
            for y in ty..(ty + p).min(h) {
                for x in tx..(tx + p).min(w) {
                    idx.push((y * w + x) * 3);
                }
            }
            for c in 0..3 {
                let sum: f64 = idx.iter().map(|&i| data[i + c] as f64).sum();
                let mean = (sum / idx.len() as f64).round() as u8;
                for &i in &idx {
                    out[i + c] = mean;
                }
            }
            tx += p;
        }
        ty += p;
    }
    out
}
