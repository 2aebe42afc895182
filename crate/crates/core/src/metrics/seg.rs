//! Semantic segmentation scores: per-class IoU, instance-weighted iIoU and
//! the relative IoU change against a baseline model.
//!
//! Ground truth is an instance raster in the Cityscapes encoding: a value
//! `v >= 1000` is instance `v` of class `v / 1000`, a value below 1000 is a
//! bare class id without instance.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const INSTANCE_ID_BASE: u32 = 1000;

/// Per-pixel class ids, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassRaster {
    width: u32,
    height: u32,
    data: Vec<u32>,
}

impl ClassRaster {
    pub fn new(width: u32, height: u32, data: Vec<u32>) -> Result<Self> {
        check_len(width, height, data.len())?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.data
    }
}

/// Per-pixel instance-encoded ground truth, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceRaster {
    width: u32,
    height: u32,
    data: Vec<u32>,
}

fn check_len(width: u32, height: u32, len: usize) -> Result<()> {
    if len != width as usize * height as usize {
        return Err(Error::Evaluation(format!(
            "{width}x{height} raster needs {} values, got {len}",
            width as usize * height as usize
        )));
    }
    Ok(())
}

pub fn class_of(v: u32) -> u32 {
    if v >= INSTANCE_ID_BASE {
        v / INSTANCE_ID_BASE
    } else {
        v
    }
}

pub fn instance_of(v: u32) -> Option<u32> {
    (v >= INSTANCE_ID_BASE).then_some(v)
}

impl InstanceRaster {
    pub fn new(width: u32, height: u32, data: Vec<u32>) -> Result<Self> {
        check_len(width, height, data.len())?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.data
    }

    pub fn to_class_raster(&self) -> ClassRaster {
        ClassRaster {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| class_of(v)).collect(),
        }
    }

    /// Pixel count of every instance of `class_id`.
    pub fn instance_sizes(&self, class_id: u32) -> HashMap<u32, u64> {
        let mut sizes = HashMap::new();
        for &v in &self.data {
            if let Some(id) = instance_of(v) {
                if class_of(v) == class_id {
                    *sizes.entry(id).or_insert(0) += 1;
                }
            }
        }
        sizes
    }
}

fn same_dims(a: (u32, u32), b: (u32, u32)) -> Result<()> {
    if a != b {
        return Err(Error::Evaluation(format!(
            "raster dimensions differ: {}x{} vs {}x{}",
            a.0, a.1, b.0, b.1
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PixelCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl PixelCounts {
    pub fn iou(&self) -> Option<f64> {
        let denom = self.tp + self.fp + self.fn_;
        (denom > 0).then(|| self.tp as f64 / denom as f64)
    }
}

impl std::ops::AddAssign for PixelCounts {
    fn add_assign(&mut self, o: Self) {
        self.tp += o.tp;
        self.fp += o.fp;
        self.fn_ += o.fn_;
    }
}

pub fn pixel_counts(gt: &ClassRaster, pred: &ClassRaster, class_id: u32) -> Result<PixelCounts> {
    same_dims(gt.dimensions(), pred.dimensions())?;
    let mut c = PixelCounts::default();
    for (&g, &p) in gt.data.iter().zip(&pred.data) {
        match (g == class_id, p == class_id) {
            (true, true) => c.tp += 1,
            (false, true) => c.fp += 1,
            (true, false) => c.fn_ += 1,
            (false, false) => {}
        }
    }
    Ok(c)
}

/// TP / (TP + FP + FN) for `class_id`; `None` when the class appears in
/// neither raster.
pub fn compute_iou(gt: &ClassRaster, pred: &ClassRaster, class_id: u32) -> Result<Option<f64>> {
    Ok(pixel_counts(gt, pred, class_id)?.iou())
}

/// Instance-weighted counts: true positives and false negatives weighted,
/// false positives plain.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct WeightedCounts {
    pub itp: f64,
    pub ifn: f64,
    pub fp: u64,
}

impl WeightedCounts {
    pub fn iiou(&self) -> Option<f64> {
        let denom = self.itp + self.fp as f64 + self.ifn;
        (denom > 0.0).then(|| self.itp / denom)
    }
}

impl std::ops::AddAssign for WeightedCounts {
    fn add_assign(&mut self, o: Self) {
        self.itp += o.itp;
        self.ifn += o.ifn;
        self.fp += o.fp;
    }
}

/// Each ground-truth pixel of `class_id` weighs
/// `avg_instance_size / size of its instance`. Ground-truth pixels of the
/// class that carry no instance id are an error.
pub fn weighted_counts(
    gt: &InstanceRaster,
    pred: &ClassRaster,
    class_id: u32,
    avg_instance_size: f64,
) -> Result<WeightedCounts> {
    if !(avg_instance_size > 0.0 && avg_instance_size.is_finite()) {
        return Err(Error::Evaluation(format!(
            "average instance size {avg_instance_size} must be > 0"
        )));
    }
    same_dims(gt.dimensions(), pred.dimensions())?;
    let sizes = gt.instance_sizes(class_id);
    let mut c = WeightedCounts::default();
    for (i, (&g, &p)) in gt.data.iter().zip(&pred.data).enumerate() {
        let predicted = p == class_id;
        if class_of(g) != class_id {
            if predicted {
                c.fp += 1;
            }
            continue;
        }
        let id = instance_of(g).ok_or_else(|| {
            Error::Evaluation(format!(
                "pixel {} ({},{}) of class {class_id} has no instance id",
                i,
                i as u32 % gt.width,
                i as u32 / gt.width
            ))
        })?;
        let w = avg_instance_size / sizes[&id] as f64;
        if predicted {
            c.itp += w;
        } else {
            c.ifn += w;
        }
    }
    Ok(c)
}

/// iTP / (iTP + FP + iFN).
pub fn compute_iiou(
    gt: &InstanceRaster,
    pred: &ClassRaster,
    class_id: u32,
    avg_instance_size: f64,
) -> Result<Option<f64>> {
    Ok(weighted_counts(gt, pred, class_id, avg_instance_size)?.iiou())
}

/// Mean pixel count of the instances of `class_id` across the dataset.
pub fn compute_avg_instance_size(dataset: &[InstanceRaster], class_id: u32) -> Result<f64> {
    let (mut total, mut n) = (0u64, 0u64);
    for r in dataset {
        for size in r.instance_sizes(class_id).values() {
            total += size;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::Evaluation(format!(
            "class {class_id} has no instances"
        )));
    }
    Ok(total as f64 / n as f64)
}

/// (IoU_anon - IoU_base) / IoU_base.
pub fn delta_iou_rel(iou_anon: f64, iou_base: f64) -> Result<f64> {
    if iou_base == 0.0 || !iou_base.is_finite() {
        return Err(Error::UndefinedRatio);
    }
    Ok((iou_anon - iou_base) / iou_base)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSegResult {
    pub class_id: u32,
    pub iou: Option<f64>,
    pub iiou: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_iou_rel: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub avg_instance_size: Option<f64>,
    pub counts: PixelCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegEvalReport {
    pub schema_version: u32,
    pub samples: usize,
    pub classes: Vec<ClassSegResult>,
}

impl SegEvalReport {
    pub fn class(&self, class_id: u32) -> Option<&ClassSegResult> {
        self.classes.iter().find(|c| c.class_id == class_id)
    }
}

/// Dataset-level scores: counts are pooled over all samples before the
/// ratios are taken. iIoU is reported for classes with instances. With a
/// `baseline`, each class also gets its relative IoU change.
pub fn evaluate_segmentation(
    samples: &[(InstanceRaster, ClassRaster)],
    classes: &[u32],
    baseline: Option<&SegEvalReport>,
) -> Result<SegEvalReport> {
    let gts: Vec<InstanceRaster> = samples.iter().map(|(g, _)| g.clone()).collect();
    let mut out = Vec::with_capacity(classes.len());
    for &class_id in classes {
        let mut counts = PixelCounts::default();
        for (g, p) in samples {
            counts += pixel_counts(&g.to_class_raster(), p, class_id)?;
        }
        let iou = counts.iou();

        let avg = compute_avg_instance_size(&gts, class_id).ok();
        let iiou = match avg {
            Some(avg) => {
                let mut w = WeightedCounts::default();
                for (g, p) in samples {
                    w += weighted_counts(g, p, class_id, avg)?;
                }
                w.iiou()
            }
            None => None,
        };

        let delta = match (
            baseline.and_then(|b| b.class(class_id)).and_then(|c| c.iou),
            iou,
        ) {
            (Some(base), Some(cur)) => Some(delta_iou_rel(cur, base)?),
            _ => None,
        };
        out.push(ClassSegResult {
            class_id,
            iou,
            iiou,
            delta_iou_rel: delta,
            avg_instance_size: avg,
            counts,
        });
    }
    Ok(SegEvalReport {
        schema_version: super::ap::REPORT_SCHEMA_VERSION,
        samples: samples.len(),
        classes: out,
    })
}
