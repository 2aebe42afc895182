//! Face anonymization methods: three pixel-space baselines and
//! diffusion-inpainting replacement.

use serde::{Deserialize, Serialize};

use crate::backends::InpaintBackend;
use crate::detection::{sort_detections, FaceDetection};
use crate::error::{Error, Result};
use crate::raster::ImageBuffer;

mod crop;
mod gauss;
mod ldfa;
mod pixel;

pub use crop::{anonymize_crop, CROP_FILL};
pub use gauss::{anonymize_gauss, gaussian_blur, gaussian_kernel, GaussConfig};
pub use ldfa::{anonymize_ldfa, model_space_mask_box, LdfaConfig, LdfaOutcome};
pub use pixel::{anonymize_pixel, PixelConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodKind {
    Gauss,
    Crop,
    Pixel,
    Ldfa,
}

impl MethodKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            MethodKind::Gauss => "gauss",
            MethodKind::Crop => "crop",
            MethodKind::Pixel => "pixel",
            MethodKind::Ldfa => "ldfa",
        }
    }
}

impl std::str::FromStr for MethodKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gauss" => Ok(MethodKind::Gauss),
            "crop" => Ok(MethodKind::Crop),
            "pixel" => Ok(MethodKind::Pixel),
            "ldfa" => Ok(MethodKind::Ldfa),
            other => Err(Error::InvalidConfig(format!("unknown method {other:?}"))),
        }
    }
}

/// A fully parameterized anonymization method.
#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    Gauss(GaussConfig),
    Crop,
    Pixel(PixelConfig),
    Ldfa(LdfaConfig),
}

impl Method {
    pub fn kind(&self) -> MethodKind {
        match self {
            Method::Gauss(_) => MethodKind::Gauss,
            Method::Crop => MethodKind::Crop,
            Method::Pixel(_) => MethodKind::Pixel,
            Method::Ldfa(_) => MethodKind::Ldfa,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Method::Gauss(c) => c.validate(),
            Method::Crop => Ok(()),
            Method::Pixel(c) => c.validate(),
            Method::Ldfa(c) => c.validate(),
        }
    }
}

/// What happened to one face.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceOutcome {
    /// Position in processing order.
    pub index: usize,
    pub face: FaceDetection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl FaceOutcome {
    pub fn anonymized(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone)]
pub struct AnonymizeOutcome {
    pub image: ImageBuffer,
    pub faces: Vec<FaceOutcome>,
}

impl AnonymizeOutcome {
    pub fn anonymized_count(&self) -> usize {
        self.faces.iter().filter(|f| f.anonymized()).count()
    }

    pub fn is_complete(&self) -> bool {
        self.faces.iter().all(FaceOutcome::anonymized)
    }
}

/// Applies `method` to every face of `img`, in processing order, on a
/// progressively updated canvas. `inpainter` is required for LDFA only.
pub fn anonymize(
    img: &ImageBuffer,
    image_id: &str,
    faces: &[FaceDetection],
    method: &Method,
    inpainter: Option<&dyn InpaintBackend>,
) -> Result<AnonymizeOutcome> {
    method.validate()?;
    if let Method::Ldfa(cfg) = method {
        let inpainter = inpainter
            .ok_or_else(|| Error::InvalidConfig("ldfa requires an inpainting backend".into()))?;
        let out = anonymize_ldfa(img, image_id, faces, cfg, inpainter)?;
        return Ok(AnonymizeOutcome {
            image: out.image,
            faces: out.faces,
        });
    }

    let mut ordered = faces.to_vec();
    sort_detections(&mut ordered);
    let mut canvas = img.clone();
    let mut outcomes = Vec::with_capacity(ordered.len());
    for (index, face) in ordered.into_iter().enumerate() {
        let result = match method {
            Method::Gauss(c) => anonymize_gauss(&canvas, &face.bbox, c),
            Method::Crop => anonymize_crop(&canvas, &face.bbox),
            Method::Pixel(c) => anonymize_pixel(&canvas, &face.bbox, c),
            Method::Ldfa(_) => unreachable!(),
        };
        let error = match result {
            Ok(next) => {
                canvas = next;
                None
            }
            Err(e) => Some(e.to_string()),
        };
        outcomes.push(FaceOutcome {
            index,
            face,
            seed: None,
            error,
        });
    }
    Ok(AnonymizeOutcome {
        image: canvas,
        faces: outcomes,
    })
}
