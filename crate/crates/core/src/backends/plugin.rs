//! Out-of-process model adapters.
//!
//! A plugin is an executable named after the backend inside the plugin
//! directory (`ANONYPIPE_BACKEND_DIR`). Rasters travel as PNG files in a
//! scratch directory; everything else as arguments and JSON on stdout.
//!
//! ```text
//! <plugin> capabilities <detector|inpainter|embedder>   -> Capabilities JSON
//! <plugin> detect --image in.png --id <image_id>       -> [{"box":[x0,y0,x1,y1],"confidence":c}, ...]
//! <plugin> inpaint --image in.png --mask mask.png --out out.png --seed N
//!          --steps N --cfg-scale X --sampler S --prompt P --tag T
//! <plugin> embed --image face.png                      -> [f64, ...]
//! ```
//!
//! A non-zero exit status is a backend failure; stderr is carried in the error.

use std::ffi::OsStr;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde::Deserialize;

use super::{
    BackendError, BackendKind, BackendResult, Capabilities, DetectorBackend, EmbedBackend,
    InpaintBackend, InpaintRequest,
};
use crate::detection::FaceDetection;
use crate::geometry::BoundingBox;
use crate::raster::ImageBuffer;

pub const BACKEND_DIR_ENV: &str = "ANONYPIPE_BACKEND_DIR";

#[derive(Debug, Clone)]
pub struct ProcessBackend {
    exe: PathBuf,
    caps: Capabilities,
}

#[derive(Deserialize)]
struct RawDetection {
    #[serde(rename = "box")]
    bbox: [i64; 4],
    confidence: f64,
}

impl ProcessBackend {
    /// Finds `name` in `dir`, or in `$ANONYPIPE_BACKEND_DIR` when `dir` is
    /// `None`, and queries its capability record.
    pub fn locate(name: &str, kind: BackendKind, dir: Option<&Path>) -> BackendResult<Self> {
        let dir = match dir {
            Some(d) => d.to_path_buf(),
            None => std::env::var_os(BACKEND_DIR_ENV)
                .map(PathBuf::from)
                .ok_or_else(|| {
                    BackendError::NotFound(format!("{name}: {BACKEND_DIR_ENV} is not set"))
                })?,
        };
        let exe = dir.join(name);
        if !exe.is_file() {
            return Err(BackendError::NotFound(format!("{}", exe.display())));
        }
        let out = run(&exe, ["capabilities", kind.as_str()])?;
        let caps: Capabilities = serde_json::from_slice(&out)
            .map_err(|e| BackendError::Failed(format!("{name}: bad capability record: {e}")))?;
        if caps.kind != kind {
            return Err(BackendError::ContractViolation(format!(
                "{name} declares kind {}, expected {}",
                caps.kind.as_str(),
                kind.as_str()
            )));
        }
        Ok(Self { exe, caps })
    }

    pub fn executable(&self) -> &Path {
        &self.exe
    }
}

fn run<I, S>(exe: &Path, args: I) -> BackendResult<Vec<u8>>
where
    I: IntoIterator<Item = S>,
    S: AsRef<OsStr>,
{
    let out = Command::new(exe).args(args).output()?;
    if !out.status.success() {
        return Err(BackendError::Failed(format!(
            "{} exited with {}: {}",
            exe.display(),
            out.status,
            String::from_utf8_lossy(&out.stderr).trim()
        )));
    }
    Ok(out.stdout)
}

fn write_png(img: &ImageBuffer, path: &Path) -> BackendResult<()> {
    img.save_png(path)
        .map_err(|e| BackendError::Failed(format!("encode {}: {e}", path.display())))
}

impl DetectorBackend for ProcessBackend {
    fn capabilities(&self) -> Capabilities {
        self.caps.clone()
    }

    fn detect(&self, img: &ImageBuffer, image_id: &str) -> BackendResult<Vec<FaceDetection>> {
        let scratch = tempfile::tempdir()?;
        let input = scratch.path().join("image.png");
        write_png(img, &input)?;
        let stdout = run(
            &self.exe,
            [
                OsStr::new("detect"),
                OsStr::new("--image"),
                input.as_os_str(),
                OsStr::new("--id"),
                OsStr::new(image_id),
            ],
        )?;
        let raw: Vec<RawDetection> = serde_json::from_slice(&stdout)
            .map_err(|e| BackendError::Failed(format!("bad detection output: {e}")))?;
        raw.into_iter()
            .map(|d| {
                let bbox = BoundingBox::new(d.bbox[0], d.bbox[1], d.bbox[2], d.bbox[3])
                    .map_err(|e| BackendError::ContractViolation(e.to_string()))?;
                FaceDetection::new(bbox, d.confidence)
                    .map_err(|e| BackendError::ContractViolation(e.to_string()))
            })
            .collect()
    }
}

impl InpaintBackend for ProcessBackend {
    fn capabilities(&self) -> Capabilities {
        self.caps.clone()
    }

    fn inpaint(&self, req: &InpaintRequest<'_>) -> BackendResult<ImageBuffer> {
        let scratch = tempfile::tempdir()?;
        let input = scratch.path().join("image.png");
        let mask = scratch.path().join("mask.png");
        let output = scratch.path().join("out.png");
        write_png(req.image, &input)?;
        req.mask
            .to_luma()
            .save(&mask)
            .map_err(|e| BackendError::Failed(format!("encode mask: {e}")))?;
        let seed = req.seed.to_string();
        let steps = req.inference_steps.to_string();
        let cfg = req.cfg_scale.to_string();
        run(
            &self.exe,
            [
                OsStr::new("inpaint"),
                OsStr::new("--image"),
                input.as_os_str(),
                OsStr::new("--mask"),
                mask.as_os_str(),
                OsStr::new("--out"),
                output.as_os_str(),
                OsStr::new("--seed"),
                OsStr::new(&seed),
                OsStr::new("--steps"),
                OsStr::new(&steps),
                OsStr::new("--cfg-scale"),
                OsStr::new(&cfg),
                OsStr::new("--sampler"),
                OsStr::new(req.sampler_id),
                OsStr::new("--prompt"),
                OsStr::new(req.prompt),
                OsStr::new("--tag"),
                OsStr::new(req.tag),
            ],
        )?;
        ImageBuffer::load(&output).map_err(|e| BackendError::Failed(format!("decode output: {e}")))
    }
}

impl EmbedBackend for ProcessBackend {
    fn capabilities(&self) -> Capabilities {
        self.caps.clone()
    }

    fn embed(&self, face: &ImageBuffer) -> BackendResult<Vec<f64>> {
        let scratch = tempfile::tempdir()?;
        let input = scratch.path().join("face.png");
        write_png(face, &input)?;
        let stdout = run(
            &self.exe,
            [
                OsStr::new("embed"),
                OsStr::new("--image"),
                input.as_os_str(),
            ],
        )?;
        let v: Vec<f64> = serde_json::from_slice(&stdout)
            .map_err(|e| BackendError::Failed(format!("bad embedding output: {e}")))?;
        if let Some(dim) = self.caps.embedding_dim {
            if v.len() != dim {
                return Err(BackendError::ContractViolation(format!(
                    "embedding of length {} from a {dim}-dim backend",
                    v.len()
                )));
            }
        }
        Ok(v)
    }
}
