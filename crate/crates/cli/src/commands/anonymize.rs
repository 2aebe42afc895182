use std::fs;
use std::path::Path;
use std::time::Instant;

use anonypipe_core::{
    anonymize, detect_faces, DetectionManifest, DetectorBackend, ImageBuffer, InpaintBackend,
    ManifestEntry, Method,
};
use rayon::prelude::*;

use super::{elapsed_ms, thread_pool};
use crate::backends;
use crate::config::RunConfig;
use crate::dataset::{list_images, output_id, resolve, DatasetImage};
use crate::error::{CliError, CliResult};
use crate::manifest::{
    BackendRecords, FaceError, ImageRecord, ImageStatus, RunManifest, StatusCounts,
    RUN_MANIFEST_SCHEMA_VERSION,
};

struct Job<'a> {
    cfg: &'a RunConfig,
    method: &'a Method,
    detector: &'a dyn DetectorBackend,
    inpainter: Option<&'a dyn InpaintBackend>,
}

impl Job<'_> {
    fn failed(
        &self,
        image: &DatasetImage,
        error: String,
        faces_detected: usize,
        start: Instant,
    ) -> ImageRecord {
        ImageRecord {
            image_path: image.id.clone(),
            output_path: None,
            status: ImageStatus::Failed,
            faces_detected,
            faces_anonymized: 0,
            face_seeds: Vec::new(),
            face_errors: Vec::new(),
            error: Some(error),
            elapsed_ms: elapsed_ms(start),
        }
    }

    fn process(&self, image: &DatasetImage) -> (ImageRecord, Option<ManifestEntry>) {
        let start = Instant::now();
        let img = match ImageBuffer::load(&image.path) {
            Ok(i) => i,
            Err(e) => {
                return (
                    self.failed(image, format!("cannot read image: {e}"), 0, start),
                    None,
                )
            }
        };
        let faces = match detect_faces(&img, &image.id, self.detector, self.cfg.threshold) {
            Ok(f) => f,
            Err(e) => return (self.failed(image, e.to_string(), 0, start), None),
        };
        let outcome = match anonymize(&img, &image.id, &faces, self.method, self.inpainter) {
            Ok(o) => o,
            Err(e) => return (self.failed(image, e.to_string(), faces.len(), start), None),
        };

        let out_id = output_id(&image.id, self.cfg.output_format.extension());
        let out_path = resolve(&self.cfg.output_dir, &out_id);
        let written = out_path
            .parent()
            .map_or(Ok(()), fs::create_dir_all)
            .map_err(anonypipe_core::Error::from)
            .and_then(|_| {
                outcome
                    .image
                    .save(&out_path, self.cfg.output_format.image_format())
            });
        if let Err(e) = written {
            let msg = format!("cannot write {}: {e}", out_path.display());
            return (self.failed(image, msg, faces.len(), start), None);
        }

        let done: Vec<_> = outcome
            .faces
            .iter()
            .filter(|f| f.anonymized())
            .map(|f| f.face)
            .collect();
        let record = ImageRecord {
            image_path: image.id.clone(),
            output_path: Some(out_id),
            status: if outcome.is_complete() {
                ImageStatus::Ok
            } else {
                ImageStatus::Partial
            },
            faces_detected: faces.len(),
            faces_anonymized: done.len(),
            face_seeds: outcome.faces.iter().filter_map(|f| f.seed).collect(),
            face_errors: outcome
                .faces
                .iter()
                .filter_map(|f| {
                    f.error.as_ref().map(|e| FaceError {
                        face_index: f.index,
                        error: e.clone(),
                    })
                })
                .collect(),
            error: None,
            elapsed_ms: elapsed_ms(start),
        };
        let entry = ManifestEntry {
            image_path: image.id.clone(),
            image_w: img.width(),
            image_h: img.height(),
            faces: done,
        };
        (record, Some(entry))
    }
}

/// Detects and anonymizes every image under `cfg.input_dir`, mirroring the
/// tree into `cfg.output_dir`, and returns the run manifest (also written to
/// `manifest_path`).
pub fn run_anonymize(cfg: &RunConfig, manifest_path: &Path) -> CliResult<RunManifest> {
    let start = Instant::now();
    cfg.validate()?;
    let method = cfg.method()?;
    if cfg.output_dir.as_os_str().is_empty() {
        return Err(CliError::usage("no output directory (output_dir or --out)"));
    }
    let images = list_images(&cfg.input_dir)?;
    let detector = backends::detector(&cfg.detector)?;
    let inpainter = match method {
        Method::Ldfa(_) => Some(backends::inpainter(&cfg.inpainter)?),
        _ => None,
    };
    fs::create_dir_all(&cfg.output_dir)?;

    let job = Job {
        cfg,
        method: &method,
        detector: &detector,
        inpainter: inpainter.as_ref().map(|i| i as &dyn InpaintBackend),
    };
    let pool = thread_pool(cfg.jobs)?;
    let results: Vec<(ImageRecord, Option<ManifestEntry>)> =
        pool.install(|| images.par_iter().map(|i| job.process(i)).collect());

    let mut records = Vec::with_capacity(results.len());
    let mut entries = Vec::new();
    for (r, e) in results {
        records.push(r);
        entries.extend(e);
    }
    records.sort_by(|a, b| a.image_path.cmp(&b.image_path));
    let detections = DetectionManifest::new(entries)?;

    let mut counts = StatusCounts::default();
    for r in &records {
        match r.status {
            ImageStatus::Ok => counts.ok += 1,
            ImageStatus::Partial => counts.partial += 1,
            ImageStatus::Failed => counts.failed += 1,
        }
    }
    let backends = BackendRecords {
        detector: detector.capabilities(),
        inpainter: inpainter.as_ref().map(|i| i.capabilities()),
    };
    let reproducible = backends.detector.deterministic
        && backends.inpainter.as_ref().is_none_or(|c| c.deterministic);
    let manifest = RunManifest {
        schema_version: RUN_MANIFEST_SCHEMA_VERSION,
        toolkit_version: anonypipe_core::VERSION.to_string(),
        config: cfg.clone(),
        backends,
        reproducible,
        faces_detected: records.iter().map(|r| r.faces_detected).sum(),
        noa: detections.face_count(),
        images: records,
        status_counts: counts,
        detections,
        elapsed_ms: elapsed_ms(start),
    };
    if let Some(parent) = manifest_path.parent() {
        fs::create_dir_all(parent)?;
    }
    manifest.save(manifest_path)?;
    Ok(manifest)
}
