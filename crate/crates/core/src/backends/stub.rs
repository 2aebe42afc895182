//! Deterministic test doubles for the model backends.

use std::collections::HashSet;

use sha2::{Digest, Sha256};

use super::{
    BackendError, BackendKind, BackendResult, Capabilities, DetectorBackend, EmbedBackend,
    InpaintBackend, InpaintRequest,
};
use crate::detection::{DetectionManifest, FaceDetection};
use crate::raster::{ImageBuffer, Mask};

pub const STUB_VERSION: &str = "1";

fn stub_caps(kind: BackendKind, name: &str) -> Capabilities {
    Capabilities {
        kind,
        name: name.to_string(),
        version: STUB_VERSION.to_string(),
        safe_for_concurrent_calls: true,
        deterministic: true,
        native_resolution: None,
        embedding_dim: None,
    }
}

/// Returns the sidecar faces verbatim after checking they lie inside `img`.
pub fn stub_detector(
    img: &ImageBuffer,
    sidecar: &[FaceDetection],
) -> BackendResult<Vec<FaceDetection>> {
    for f in sidecar {
        if !f.bbox.fits_in(img.width(), img.height()) {
            return Err(BackendError::InvalidInput(format!(
                "sidecar box {} outside {}x{} image",
                f.bbox,
                img.width(),
                img.height()
            )));
        }
    }
    Ok(sidecar.to_vec())
}

/// Detector that replays faces from a manifest keyed by image path.
#[derive(Debug, Clone)]
pub struct SidecarDetector {
    sidecar: DetectionManifest,
}

impl SidecarDetector {
    pub fn new(sidecar: DetectionManifest) -> Self {
        Self { sidecar }
    }
}

impl DetectorBackend for SidecarDetector {
    fn capabilities(&self) -> Capabilities {
        stub_caps(BackendKind::Detector, "stub")
    }

    fn detect(&self, img: &ImageBuffer, image_id: &str) -> BackendResult<Vec<FaceDetection>> {
        match self.sidecar.entry(image_id) {
            Some(e) => stub_detector(img, &e.faces),
            None => Ok(Vec::new()),
        }
    }
}

/// Colour the fill stub paints for `seed`: the three low bytes of the seed.
pub fn seed_color(seed: u64) -> [u8; 3] {
    [
        (seed % 256) as u8,
        ((seed / 256) % 256) as u8,
        ((seed / 65536) % 256) as u8,
    ]
}

/// Sets every masked pixel to [`seed_color`] and returns the rest untouched.
pub fn stub_inpainter(patch: &ImageBuffer, mask: &Mask, seed: u64) -> BackendResult<ImageBuffer> {
    if mask.dimensions() != patch.dimensions() {
        return Err(BackendError::InvalidInput(format!(
            "mask {}x{} does not match patch {}x{}",
            mask.width(),
            mask.height(),
            patch.width(),
            patch.height()
        )));
    }
    let color = seed_color(seed);
    let mut out = patch.clone();
    for y in 0..patch.height() {
        for x in 0..patch.width() {
            if mask.get(x, y) {
                out.put_pixel(x, y, color);
            }
        }
    }
    Ok(out)
}

/// Inpainter stand-in: constant seed-colour fill, or identity.
#[derive(Debug, Clone, Default)]
pub struct StubInpainter {
    pub identity: bool,
    /// Request tags (`<image>#<face>`) for which the call fails.
    pub fail_tags: HashSet<String>,
}

impl StubInpainter {
    pub fn fill() -> Self {
        Self::default()
    }

    pub fn identity() -> Self {
        Self {
            identity: true,
            ..Self::default()
        }
    }
}

impl InpaintBackend for StubInpainter {
    fn capabilities(&self) -> Capabilities {
        let name = if self.identity {
            "stub-identity"
        } else {
            "stub"
        };
        stub_caps(BackendKind::Inpainter, name)
    }

    fn inpaint(&self, req: &InpaintRequest<'_>) -> BackendResult<ImageBuffer> {
        if self.fail_tags.contains(req.tag) {
            return Err(BackendError::Failed(format!(
                "injected failure for {}",
                req.tag
            )));
        }
        if self.identity {
            if req.mask.dimensions() != req.image.dimensions() {
                return Err(BackendError::InvalidInput(
                    "mask/patch dimension mismatch".into(),
                ));
            }
            return Ok(req.image.clone());
        }
        stub_inpainter(req.image, req.mask, req.seed)
    }
}

/// Deterministic pseudo-embedding: SHA-256 of the raster (dimensions and
/// samples) expanded in counter mode to `dim` values in [-1, 1).
pub fn stub_embedder(img: &ImageBuffer, dim: usize) -> Vec<f64> {
    let mut h = Sha256::new();
    h.update(img.width().to_le_bytes());
    h.update(img.height().to_le_bytes());
    h.update(img.as_raw());
    let digest = h.finalize();

    let mut out = Vec::with_capacity(dim);
    let mut counter: u64 = 0;
    while out.len() < dim {
        let block = Sha256::new()
            .chain_update(digest)
            .chain_update(counter.to_le_bytes())
            .finalize();
        for chunk in block.chunks_exact(8) {
            if out.len() == dim {
                break;
            }
            let v = u64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
            // top 53 bits -> [0, 1) -> [-1, 1)
            let unit = (v >> 11) as f64 / (1u64 << 53) as f64;
            out.push(unit * 2.0 - 1.0);
        }
        counter += 1;
    }
    out
}

#[derive(Debug, Clone)]
pub struct StubEmbedder {
    pub dim: usize,
}

impl StubEmbedder {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

impl EmbedBackend for StubEmbedder {
    fn capabilities(&self) -> Capabilities {
        Capabilities {
            embedding_dim: Some(self.dim),
            ..stub_caps(BackendKind::Embedder, "stub")
        }
    }

    fn embed(&self, face: &ImageBuffer) -> BackendResult<Vec<f64>> {
        if self.dim < 2 {
            return Err(BackendError::InvalidInput(format!(
                "embedding dim {} < 2",
                self.dim
            )));
        }
        Ok(stub_embedder(face, self.dim))
    }
}
