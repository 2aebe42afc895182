//! Dataset face anonymization: detect faces, replace them by
//! diffusion inpainting or a pixel-space baseline, and measure what the
//! anonymization did to downstream detection, segmentation and face
//! recognition.

pub mod anonymize;
pub mod backends;
pub mod detection;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod raster;

pub use anonymize::{
    anonymize, AnonymizeOutcome, FaceOutcome, GaussConfig, LdfaConfig, Method, MethodKind,
    PixelConfig,
};
pub use backends::{
    BackendError, Capabilities, DetectorBackend, EmbedBackend, InpaintBackend, InpaintRequest,
};
pub use detection::{count_noa, detect_faces, DetectionManifest, FaceDetection, ManifestEntry};
pub use error::{Error, Result};
pub use geometry::{pad_and_clip, BoundingBox, SizeCategory};
pub use raster::{ImageBuffer, Mask};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
