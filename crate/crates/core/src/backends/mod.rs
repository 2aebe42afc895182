//! Adapter seams for the three heavy models: face detector, diffusion
//! inpainter and face embedder.
//!
//! Every backend reports a [`Capabilities`] record. The pipeline never calls a
//! backend concurrently unless it declares `safe_for_concurrent_calls`; wrap
//! shared handles in [`Gated`] to get that guarantee.

use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detection::FaceDetection;
use crate::raster::{ImageBuffer, Mask};

pub mod plugin;
pub mod stub;

#[derive(Error, Debug)]
pub enum BackendError {
    #[error("backend failed: {0}")]
    Failed(String),

    #[error("invalid backend input: {0}")]
    InvalidInput(String),

    #[error("backend contract violated: {0}")]
    ContractViolation(String),

    #[error("backend not found: {0}")]
    NotFound(String),

    #[error("backend io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type BackendResult<T> = std::result::Result<T, BackendError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Detector,
    Inpainter,
    Embedder,
}

impl BackendKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            BackendKind::Detector => "detector",
            BackendKind::Inpainter => "inpainter",
            BackendKind::Embedder => "embedder",
        }
    }
}

/// Self-declared properties of a backend, pinned into run manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Capabilities {
    pub kind: BackendKind,
    pub name: String,
    pub version: String,
    pub safe_for_concurrent_calls: bool,
    /// Identical inputs (and seed, for inpainters) give identical outputs.
    #[serde(default = "default_true")]
    pub deterministic: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub native_resolution: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding_dim: Option<usize>,
}

fn default_true() -> bool {
    true
}

pub trait DetectorBackend: Send + Sync {
    fn capabilities(&self) -> Capabilities;

    /// Raw detections for `img`. `image_id` identifies the image within its
    /// dataset (its relative path).
    fn detect(&self, img: &ImageBuffer, image_id: &str) -> BackendResult<Vec<FaceDetection>>;
}

/// One inpainting call. `mask` has the dimensions of `image`; pixels outside
/// the mask must come back unchanged.
#[derive(Debug, Clone, Copy)]
pub struct InpaintRequest<'a> {
    pub image: &'a ImageBuffer,
    pub mask: &'a Mask,
    pub prompt: &'a str,
    pub cfg_scale: f64,
    pub sampler_id: &'a str,
    pub inference_steps: u32,
    pub seed: u64,
    /// `<image_id>#<face index>`, for logs and fault injection.
    pub tag: &'a str,
}

pub trait InpaintBackend: Send + Sync {
    fn capabilities(&self) -> Capabilities;

    fn inpaint(&self, req: &InpaintRequest<'_>) -> BackendResult<ImageBuffer>;
}

pub trait EmbedBackend: Send + Sync {
    fn capabilities(&self) -> Capabilities;

    fn embed(&self, face: &ImageBuffer) -> BackendResult<Vec<f64>>;
}

/// Checks the mask contract on an inpainter result: same dimensions and
/// every unmasked pixel bit-identical to the request image.
pub fn check_inpaint_output(req: &InpaintRequest<'_>, out: &ImageBuffer) -> BackendResult<()> {
    if out.dimensions() != req.image.dimensions() {
        return Err(BackendError::ContractViolation(format!(
            "output {}x{} differs from input {}x{}",
            out.width(),
            out.height(),
            req.image.width(),
            req.image.height()
        )));
    }
    for y in 0..out.height() {
        for x in 0..out.width() {
            if !req.mask.get(x, y) && out.pixel(x, y) != req.image.pixel(x, y) {
                return Err(BackendError::ContractViolation(format!(
                    "unmasked pixel ({x},{y}) modified"
                )));
            }
        }
    }
    Ok(())
}

/// Serializes calls into a backend that is not safe for concurrent use.
/// Backends declaring themselves concurrency-safe pass straight through.
pub struct Gated<B: ?Sized> {
    inner: Arc<B>,
    lock: Option<Mutex<()>>,
}

impl<B: ?Sized> Gated<B> {
    fn with_caps(inner: Arc<B>, caps: &Capabilities) -> Self {
        let lock = (!caps.safe_for_concurrent_calls).then(|| Mutex::new(()));
        Self { inner, lock }
    }

    fn run<T>(&self, f: impl FnOnce(&B) -> T) -> T {
        match &self.lock {
            Some(m) => {
                let _guard = m.lock().unwrap_or_else(|e| e.into_inner());
                f(&self.inner)
            }
            None => f(&self.inner),
        }
    }

    pub fn is_serialized(&self) -> bool {
        self.lock.is_some()
    }
}

impl Gated<dyn DetectorBackend> {
    pub fn detector(inner: Arc<dyn DetectorBackend>) -> Self {
        let caps = inner.capabilities();
        Self::with_caps(inner, &caps)
    }
}

impl Gated<dyn InpaintBackend> {
    pub fn inpainter(inner: Arc<dyn InpaintBackend>) -> Self {
        let caps = inner.capabilities();
        Self::with_caps(inner, &caps)
    }
}

impl Gated<dyn EmbedBackend> {
    pub fn embedder(inner: Arc<dyn EmbedBackend>) -> Self {
        let caps = inner.capabilities();
        Self::with_caps(inner, &caps)
    }
}

impl DetectorBackend for Gated<dyn DetectorBackend> {
    fn capabilities(&self) -> Capabilities {
        self.inner.capabilities()
    }

    fn detect(&self, img: &ImageBuffer, image_id: &str) -> BackendResult<Vec<FaceDetection>> {
        self.run(|b| b.detect(img, image_id))
    }
}

impl InpaintBackend for Gated<dyn InpaintBackend> {
    fn capabilities(&self) -> Capabilities {
        self.inner.capabilities()
    }

    fn inpaint(&self, req: &InpaintRequest<'_>) -> BackendResult<ImageBuffer> {
        self.run(|b| b.inpaint(req))
    }
}

impl EmbedBackend for Gated<dyn EmbedBackend> {
    fn capabilities(&self) -> Capabilities {
        self.inner.capabilities()
    }

    fn embed(&self, face: &ImageBuffer) -> BackendResult<Vec<f64>> {
        self.run(|b| b.embed(face))
    }
}
