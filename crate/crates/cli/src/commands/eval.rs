use std::path::{Path, PathBuf};

use anonypipe_core::metrics::{
    coco_iou_thresholds, evaluate_detection, evaluate_segmentation, face_distances, histogram,
    ClassRaster, DetEvalReport, EmbeddingDistanceRecord, Histogram, InstanceRaster, SegEvalReport,
};
use anonypipe_core::{DetectionManifest, ImageBuffer};

use crate::backends;
use crate::config::RunConfig;
use crate::dataset::{list_pngs, load_labels, output_id, resolve};
use crate::error::{CliError, CliResult};

pub const DEFAULT_HIST_BINS: usize = 50;
pub const DEFAULT_HIST_LO: f64 = 0.0;
pub const DEFAULT_HIST_HI: f64 = 2.0;

fn load_manifest(path: &Path) -> CliResult<DetectionManifest> {
    DetectionManifest::load(path).map_err(|e| CliError::failure(format!("{}: {e}", path.display())))
}

pub fn run_eval_det(
    gt: &Path,
    pred: &Path,
    thresholds: Option<&[f64]>,
) -> CliResult<DetEvalReport> {
    let gt = load_manifest(gt)?;
    let pred = load_manifest(pred)?;
    let coco = coco_iou_thresholds();
    Ok(evaluate_detection(&gt, &pred, thresholds.unwrap_or(&coco))?)
}

#[derive(Debug, Clone)]
pub struct EmbedEvalOutput {
    pub records: Vec<EmbeddingDistanceRecord>,
    pub histogram: Histogram,
}

/// The anonymized counterpart of `id`: the same relative path, or the same
/// path with a `.png` extension (what `anonymize` writes by default).
fn counterpart(anon_dir: &Path, id: &str) -> Option<PathBuf> {
    [id.to_string(), output_id(id, "png"), output_id(id, "jpg")]
        .into_iter()
        .map(|c| resolve(anon_dir, &c))
        .find(|p| p.is_file())
}

/// Embedding distance for every face of `manifest`, cut at the same box from
/// the original and the anonymized image.
pub fn run_eval_embed(
    cfg: &RunConfig,
    orig_dir: &Path,
    anon_dir: &Path,
    manifest: &Path,
    bins: usize,
) -> CliResult<EmbedEvalOutput> {
    let manifest = load_manifest(manifest)?;
    let embedder = backends::embedder(&cfg.embedder)?;
    let mut records = Vec::new();
    for entry in &manifest.entries {
        let orig_path = resolve(orig_dir, &entry.image_path);
        let anon_path = counterpart(anon_dir, &entry.image_path).ok_or_else(|| {
            CliError::failure(format!(
                "no anonymized counterpart for {} in {}",
                entry.image_path,
                anon_dir.display()
            ))
        })?;
        let load = |p: &Path| {
            ImageBuffer::load(p).map_err(|e| CliError::failure(format!("{}: {e}", p.display())))
        };
        let orig = load(&orig_path)?;
        let anon = load(&anon_path)?;
        records.extend(face_distances(
            &orig,
            &anon,
            &entry.image_path,
            &entry.faces,
            &embedder,
        )?);
    }
    let values: Vec<f64> = records.iter().map(|r| r.l2_distance).collect();
    let histogram = histogram(&values, bins, DEFAULT_HIST_LO, DEFAULT_HIST_HI)
        .map_err(|e| CliError::usage(e.to_string()))?;
    Ok(EmbedEvalOutput { records, histogram })
}

/// Pairs every instance-id PNG under `gt_dir` with the class-id PNG at the
/// same relative path under `pred_dir`.
pub fn run_eval_seg(
    gt_dir: &Path,
    pred_dir: &Path,
    classes: &[u32],
    baseline: Option<&Path>,
) -> CliResult<SegEvalReport> {
    if classes.is_empty() {
        return Err(CliError::usage("no classes given"));
    }
    let baseline: Option<SegEvalReport> = baseline
        .map(|p| -> CliResult<SegEvalReport> {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::failure(format!("{}: {e}", p.display())))?;
            Ok(serde_json::from_str(&text)?)
        })
        .transpose()?;

    let mut samples = Vec::new();
    for gt in list_pngs(gt_dir)? {
        let pred_path = resolve(pred_dir, &gt.id);
        if !pred_path.is_file() {
            return Err(CliError::failure(format!("no prediction for {}", gt.id)));
        }
        let (gw, gh, gdata) = load_labels(&gt.path)?;
        let (pw, ph, pdata) = load_labels(&pred_path)?;
        if (gw, gh) != (pw, ph) {
            return Err(CliError::failure(format!(
                "{}: ground truth is {gw}x{gh}, prediction {pw}x{ph}",
                gt.id
            )));
        }
        samples.push((
            InstanceRaster::new(gw, gh, gdata)?,
            ClassRaster::new(pw, ph, pdata)?,
        ));
    }
    Ok(evaluate_segmentation(&samples, classes, baseline.as_ref())?)
}
