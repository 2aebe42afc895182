use std::path::Path;

use anonypipe_core::{detect_faces, DetectionManifest, ImageBuffer, ManifestEntry};
use rayon::prelude::*;

use super::thread_pool;
use crate::backends;
use crate::config::RunConfig;
use crate::dataset::list_images;
use crate::error::{CliError, CliResult};

/// Runs the configured detector over every image under `input_dir`. Any
/// unreadable image or backend failure aborts the run.
pub fn run_detect(cfg: &RunConfig, input_dir: &Path) -> CliResult<DetectionManifest> {
    cfg.validate()?;
    let images = list_images(input_dir)?;
    let detector = backends::detector(&cfg.detector)?;
    let pool = thread_pool(cfg.jobs)?;
    let entries: CliResult<Vec<ManifestEntry>> = pool.install(|| {
        images
            .par_iter()
            .map(|image| {
                let img = ImageBuffer::load(&image.path)
                    .map_err(|e| CliError::failure(format!("{}: {e}", image.id)))?;
                let faces = detect_faces(&img, &image.id, &detector, cfg.threshold)?;
                Ok(ManifestEntry {
                    image_path: image.id.clone(),
                    image_w: img.width(),
                    image_h: img.height(),
                    faces,
                })
            })
            .collect()
    });
    Ok(DetectionManifest::new(entries?)?)
}
