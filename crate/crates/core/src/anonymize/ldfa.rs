//! Detect-then-inpaint face replacement.
//!
//! Each face is handled on its own: the face box grown by a context ring is
//! cut from the working canvas, scaled to the model resolution and handed to
//! the inpainter together with a mask covering only the face itself. The
//! inpainted patch is scaled back and only the face region is written to the
//! canvas; the context ring is never written back.

use serde::{Deserialize, Serialize};

use super::FaceOutcome;
use crate::backends::{check_inpaint_output, InpaintBackend, InpaintRequest};
use crate::detection::{sort_detections, FaceDetection};
use crate::error::{Error, Result};
use crate::geometry::{pad_and_clip, BoundingBox};
use crate::raster::{ImageBuffer, Mask};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LdfaConfig {
    /// Context ring added on every side of the face, in pixels.
    pub context_pad: u32,
    /// Square side the padded patch is scaled to before inpainting.
    pub model_resolution: u32,
    pub prompt: String,
    pub cfg_scale: f64,
    pub sampler_id: String,
    pub inference_steps: u32,
    pub base_seed: u64,
}

impl Default for LdfaConfig {
    fn default() -> Self {
        Self {
            context_pad: 32,
            model_resolution: 512,
            prompt: String::new(),
            cfg_scale: 1.0,
            sampler_id: "k_euler_a".to_string(),
            inference_steps: 50,
            base_seed: 0,
        }
    }
}

impl LdfaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.model_resolution < 64 {
            return Err(Error::InvalidConfig(format!(
                "ldfa model_resolution {} must be >= 64",
                self.model_resolution
            )));
        }
        if self.inference_steps == 0 {
            return Err(Error::InvalidConfig(
                "ldfa inference_steps must be >= 1".into(),
            ));
        }
        if !self.cfg_scale.is_finite() {
            return Err(Error::InvalidConfig("ldfa cfg_scale must be finite".into()));
        }
        Ok(())
    }

    pub fn face_seed(&self, face_index: usize) -> u64 {
        self.base_seed.wrapping_add(face_index as u64)
    }
}

/// Face region inside a padded patch of `patch_w x patch_h`, mapped into
/// `res x res` model space. Top-left is floored and bottom-right ceiled so
/// the mask never under-covers the face.
pub fn model_space_mask_box(
    inner: &BoundingBox,
    patch_w: u32,
    patch_h: u32,
    res: u32,
) -> BoundingBox {
    let (pw, ph, r) = (patch_w as i64, patch_h as i64, res as i64);
    BoundingBox {
        x0: inner.x0 * r / pw,
        y0: inner.y0 * r / ph,
        x1: (inner.x1 * r + pw - 1) / pw,
        y1: (inner.y1 * r + ph - 1) / ph,
    }
}

/// Result of one LDFA pass over an image.
#[derive(Debug, Clone)]
pub struct LdfaOutcome {
    pub image: ImageBuffer,
    pub faces: Vec<FaceOutcome>,
}

impl LdfaOutcome {
    pub fn is_complete(&self) -> bool {
        self.faces.iter().all(|f| f.error.is_none())
    }
}

/// Anonymizes `faces` one after another in processing order. A face whose
/// inpainting call fails (or breaks the mask contract) is left untouched
/// and reported in the outcome; the remaining faces are still processed.
pub fn anonymize_ldfa(
    img: &ImageBuffer,
    image_id: &str,
    faces: &[FaceDetection],
    cfg: &LdfaConfig,
    inpainter: &dyn InpaintBackend,
) -> Result<LdfaOutcome> {
    cfg.validate()?;
    let mut ordered = faces.to_vec();
    sort_detections(&mut ordered);

    let mut canvas = img.clone();
    let mut outcomes = Vec::with_capacity(ordered.len());
    for (index, face) in ordered.into_iter().enumerate() {
        let seed = cfg.face_seed(index);
        let tag = format!("{image_id}#{index}");
        let error = inpaint_face(&mut canvas, &face, cfg, seed, &tag, inpainter)
            .err()
            .map(|e| e.to_string());
        outcomes.push(FaceOutcome {
            index,
            face,
            seed: Some(seed),
            error,
        });
    }
    Ok(LdfaOutcome {
        image: canvas,
        faces: outcomes,
    })
}

fn inpaint_face(
    canvas: &mut ImageBuffer,
    face: &FaceDetection,
    cfg: &LdfaConfig,
    seed: u64,
    tag: &str,
    inpainter: &dyn InpaintBackend,
) -> Result<()> {
    let (w, h) = canvas.dimensions();
    let padded = pad_and_clip(face.bbox, cfg.context_pad, w, h)?;
    let patch = canvas.crop(&padded)?;
    let (pw, ph) = patch.dimensions();
    let res = cfg.model_resolution;

    let model_in = patch.resize(res, res)?;
    let inner = BoundingBox {
        x0: face.bbox.x0 - padded.x0,
        y0: face.bbox.y0 - padded.y0,
        x1: face.bbox.x1 - padded.x0,
        y1: face.bbox.y1 - padded.y0,
    };
    let mask = Mask::from_box(res, res, &model_space_mask_box(&inner, pw, ph, res));

    let req = InpaintRequest {
        image: &model_in,
        mask: &mask,
        prompt: &cfg.prompt,
        cfg_scale: cfg.cfg_scale,
        sampler_id: &cfg.sampler_id,
        inference_steps: cfg.inference_steps,
        seed,
        tag,
    };
    let model_out = inpainter.inpaint(&req)?;
    check_inpaint_output(&req, &model_out)?;

    // Only pixels whose back-scaled value actually moved are written, so an
    // inpainter that returns its input leaves the canvas bit-exact.
    let back = model_out.resize(pw, ph)?;
    let reference = model_in.resize(pw, ph)?;
    for y in inner.y0..inner.y1 {
        for x in inner.x0..inner.x1 {
            let (px, py) = (x as u32, y as u32);
            let v = back.pixel(px, py);
            if v != reference.pixel(px, py) {
                canvas.put_pixel((padded.x0 + x) as u32, (padded.y0 + y) as u32, v);
            }
        }
    }
    Ok(())
}
