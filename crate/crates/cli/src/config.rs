//! Run configuration, read from TOML. Every field has a default so a run
//! manifest's config snapshot alone reproduces the run.
//!
//! ```toml
//! method = "ldfa"
//! seed = 7
//! threshold = 0.4
//! input_dir = "images"
//! output_dir = "anonymized"
//!
//! [ldfa]
//! inference_steps = 50
//!
//! [detector]
//! backend = "stub"
//! [detector.stub]
//! sidecar_path = "faces.json"
//!
//! [inpainter]
//! backend = "stub"
//! [inpainter.stub]
//! identity = false
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use anonypipe_core::anonymize::MethodKind;
use anonypipe_core::detection::DEFAULT_THRESHOLD;
use anonypipe_core::{GaussConfig, LdfaConfig, Method, PixelConfig};
use image::ImageFormat;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const STUB_BACKEND: &str = "stub";
pub const DEFAULT_EMBED_DIM: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Png,
    Jpeg,
}

impl OutputFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            OutputFormat::Png => "png",
            OutputFormat::Jpeg => "jpg",
        }
    }

    pub fn image_format(&self) -> ImageFormat {
        match self {
            OutputFormat::Png => ImageFormat::Png,
            OutputFormat::Jpeg => ImageFormat::Jpeg,
        }
    }
}

fn stub() -> String {
    STUB_BACKEND.to_string()
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorStub {
    /// Detection manifest the stub replays, keyed by relative image path.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sidecar_path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorSection {
    pub backend: String,
    pub stub: DetectorStub,
}

impl Default for DetectorSection {
    fn default() -> Self {
        Self {
            backend: stub(),
            stub: DetectorStub::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InpainterStub {
    pub identity: bool,
    /// `<image path>#<face index>` tags whose inpainting call fails.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub fail_faces: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InpainterSection {
    pub backend: String,
    pub stub: InpainterStub,
}

impl Default for InpainterSection {
    fn default() -> Self {
        Self {
            backend: stub(),
            stub: InpainterStub::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedderStub {
    pub dim: usize,
}

impl Default for EmbedderStub {
    fn default() -> Self {
        Self {
            dim: DEFAULT_EMBED_DIM,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedderSection {
    pub backend: String,
    pub stub: EmbedderStub,
}

impl Default for EmbedderSection {
    fn default() -> Self {
        Self {
            backend: stub(),
            stub: EmbedderStub::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<MethodKind>,
    /// Base seed; face `i` of an image is inpainted with `seed + i`.
    pub seed: u64,
    pub threshold: f64,
    /// Worker threads; 0 uses every available core.
    pub jobs: usize,
    pub input_dir: PathBuf,
    pub output_dir: PathBuf,
    pub output_format: OutputFormat,
    pub gauss: GaussConfig,
    pub pixel: PixelConfig,
    pub ldfa: LdfaConfig,
    pub detector: DetectorSection,
    pub inpainter: InpainterSection,
    pub embedder: EmbedderSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            method: None,
            seed: 0,
            threshold: DEFAULT_THRESHOLD,
            jobs: 0,
            input_dir: PathBuf::new(),
            output_dir: PathBuf::new(),
            output_format: OutputFormat::default(),
            gauss: GaussConfig::default(),
            pixel: PixelConfig::default(),
            ldfa: LdfaConfig::default(),
            detector: DetectorSection::default(),
            inpainter: InpainterSection::default(),
            embedder: EmbedderSection::default(),
        }
    }
}

fn rebase(base: &Path, p: &mut PathBuf) {
    if !p.as_os_str().is_empty() && p.is_relative() {
        *p = base.join(&*p);
    }
}

impl RunConfig {
    fn parse(s: &str) -> Result<Self, String> {
        let mut cfg: RunConfig = toml::from_str(s).map_err(|e| e.to_string())?;
        if cfg.ldfa.base_seed != 0 {
            if cfg.seed != 0 && cfg.seed != cfg.ldfa.base_seed {
                return Err(format!(
                    "seed = {} conflicts with ldfa.base_seed = {}",
                    cfg.seed, cfg.ldfa.base_seed
                ));
            }
            cfg.seed = cfg.ldfa.base_seed;
        }
        cfg.ldfa.base_seed = cfg.seed;
        Ok(cfg)
    }

    pub fn from_toml(s: &str) -> CliResult<Self> {
        Self::parse(s).map_err(CliError::Usage)
    }

    /// Reads `path`; relative paths inside are taken relative to its directory.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg =
            Self::parse(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        rebase(base, &mut cfg.input_dir);
        rebase(base, &mut cfg.output_dir);
        if let Some(p) = cfg.detector.stub.sidecar_path.as_mut() {
            rebase(base, p);
        }
        Ok(cfg)
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.ldfa.base_seed = seed;
    }

    pub fn validate(&self) -> CliResult<()> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(CliError::usage(format!(
                "threshold {} outside [0, 1]",
                self.threshold
            )));
        }
        if let Some(kind) = self.method {
            self.method_for(kind).validate()?;
        }
        Ok(())
    }

    fn method_for(&self, kind: MethodKind) -> Method {
        match kind {
            MethodKind::Gauss => Method::Gauss(self.gauss.clone()),
            MethodKind::Crop => Method::Crop,
            MethodKind::Pixel => Method::Pixel(self.pixel.clone()),
            MethodKind::Ldfa => Method::Ldfa(LdfaConfig {
                base_seed: self.seed,
                ..self.ldfa.clone()
            }),
        }
    }

    /// The configured method with its parameters.
    pub fn method(&self) -> CliResult<Method> {
        let kind = self
            .method
            .ok_or_else(|| CliError::usage("no method configured"))?;
        let m = self.method_for(kind);
        m.validate()?;
        Ok(m)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
