//! Backend construction from config sections. `stub` selects the built-in
//! test doubles; any other name is looked up as a plugin executable in
//! `$ANONYPIPE_BACKEND_DIR`.

use std::sync::Arc;

use anonypipe_core::backends::plugin::ProcessBackend;
use anonypipe_core::backends::stub::{SidecarDetector, StubEmbedder, StubInpainter};
use anonypipe_core::backends::{BackendKind, Gated};
use anonypipe_core::{DetectionManifest, DetectorBackend, EmbedBackend, InpaintBackend};

use crate::config::{DetectorSection, EmbedderSection, InpainterSection, STUB_BACKEND};
use crate::error::{CliError, CliResult};

fn plugin(name: &str, kind: BackendKind) -> CliResult<ProcessBackend> {
    ProcessBackend::locate(name, kind, None)
        .map_err(|e| CliError::usage(format!("{} backend {name:?}: {e}", kind.as_str())))
}

pub fn detector(cfg: &DetectorSection) -> CliResult<Gated<dyn DetectorBackend>> {
    let inner: Arc<dyn DetectorBackend> = if cfg.backend == STUB_BACKEND {
        let path = cfg
            .stub
            .sidecar_path
            .as_ref()
            .ok_or_else(|| CliError::usage("stub detector needs detector.stub.sidecar_path"))?;
        let sidecar = DetectionManifest::load(path)
            .map_err(|e| CliError::usage(format!("sidecar {}: {e}", path.display())))?;
        Arc::new(SidecarDetector::new(sidecar))
    } else {
        Arc::new(plugin(&cfg.backend, BackendKind::Detector)?)
    };
    Ok(Gated::detector(inner))
}

pub fn inpainter(cfg: &InpainterSection) -> CliResult<Gated<dyn InpaintBackend>> {
    let inner: Arc<dyn InpaintBackend> = if cfg.backend == STUB_BACKEND {
        Arc::new(StubInpainter {
            identity: cfg.stub.identity,
            fail_tags: cfg.stub.fail_faces.iter().cloned().collect(),
        })
    } else {
        Arc::new(plugin(&cfg.backend, BackendKind::Inpainter)?)
    };
    Ok(Gated::inpainter(inner))
}

pub fn embedder(cfg: &EmbedderSection) -> CliResult<Gated<dyn EmbedBackend>> {
    let inner: Arc<dyn EmbedBackend> = if cfg.backend == STUB_BACKEND {
        if cfg.stub.dim < 2 {
            return Err(CliError::usage(format!(
                "embedder.stub.dim {} must be >= 2",
                cfg.stub.dim
            )));
        }
        Arc::new(StubEmbedder::new(cfg.stub.dim))
    } else {
        Arc::new(plugin(&cfg.backend, BackendKind::Embedder)?)
    };
    Ok(Gated::embedder(inner))
}
