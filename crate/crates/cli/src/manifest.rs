//! Run manifests: what an `anonymize` run did, image by image.

use std::fs;
use std::path::Path;

use anonypipe_core::{Capabilities, DetectionManifest};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::CliResult;

pub const RUN_MANIFEST_SCHEMA_VERSION: u32 = 1;
pub const RUN_MANIFEST_FILE: &str = "run_manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageStatus {
    /// Every detected face was anonymized.
    Ok,
    /// The image was written but at least one face was not anonymized.
    Partial,
    /// Nothing was written for this image.
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceError {
    pub face_index: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub image_path: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_path: Option<String>,
    pub status: ImageStatus,
    pub faces_detected: usize,
    pub faces_anonymized: usize,
    /// Inpainting seed per face, in processing order (LDFA only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub face_seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub face_errors: Vec<FaceError>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendRecords {
    pub detector: Capabilities,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inpainter: Option<Capabilities>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StatusCounts {
    pub ok: usize,
    pub partial: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub toolkit_version: String,
    pub config: RunConfig,
    pub backends: BackendRecords,
    /// All backends declared themselves deterministic.
    pub reproducible: bool,
    pub images: Vec<ImageRecord>,
    pub status_counts: StatusCounts,
    pub faces_detected: usize,
    /// Number of anonymized faces; equals the face count of `detections`.
    pub noa: usize,
    /// Faces that were actually anonymized, per image.
    pub detections: DetectionManifest,
    pub elapsed_ms: f64,
}

impl RunManifest {
    /// Every image "ok": NoA equals the number of detected faces.
    pub fn is_complete(&self) -> bool {
        self.images.iter().all(|i| i.status == ImageStatus::Ok)
    }

    pub fn image(&self, image_path: &str) -> Option<&ImageRecord> {
        self.images.iter().find(|i| i.image_path == image_path)
    }

    /// Zeroes all wall-clock fields so two runs can be compared byte for byte.
    pub fn canonicalize(&mut self) {
        self.elapsed_ms = 0.0;
        for i in &mut self.images {
            i.elapsed_ms = 0.0;
        }
    }

    pub fn canonical(&self) -> Self {
        let mut m = self.clone();
        m.canonicalize();
        m
    }

    pub fn to_json(&self) -> CliResult<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        Ok(fs::write(path, self.to_json()?)?)
    }
}
