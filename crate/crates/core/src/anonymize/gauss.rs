use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::raster::{ImageBuffer, CHANNELS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaussConfig {
    pub sigma: f64,
    /// Defaults to `ceil(3 * sigma)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel_radius: Option<u32>,
}

impl Default for GaussConfig {
    fn default() -> Self {
        Self {
            sigma: 3.0,
            kernel_radius: None,
        }
    }
}

impl GaussConfig {
    pub fn radius(&self) -> u32 {
        self.kernel_radius
            .unwrap_or_else(|| (3.0 * self.sigma).ceil() as u32)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "gauss sigma {} must be > 0",
                self.sigma
            )));
        }
        Ok(())
    }
}

/// Normalized zero-mean 1-D Gaussian taps, index `radius` is the centre.
pub fn gaussian_kernel(cfg: &GaussConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let r = cfg.radius() as i64;
    let two_s2 = 2.0 * cfg.sigma * cfg.sigma;
    let mut k: Vec<f64> = (-r..=r)
        .map(|i| (-((i * i) as f64) / two_s2).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|w| *w /= sum);
    Ok(k)
}

/// Separable blur of a whole raster with edge replication.
pub fn gaussian_blur(img: &ImageBuffer, cfg: &GaussConfig) -> Result<ImageBuffer> {
    let kernel = gaussian_kernel(cfg)?;
    let r = cfg.radius() as i64;
    let (w, h) = (img.width() as i64, img.height() as i64);
    let src = img.as_raw();
    let idx = |x: i64, y: i64| (y * w + x) as usize * CHANNELS;

    let mut horizontal = vec![0.0f64; src.len()];
    for y in 0..h {
        for x in 0..w {
            let o = idx(x, y);
            for (t, wt) in kernel.iter().enumerate() {
                let sx = (x + t as i64 - r).clamp(0, w - 1);
                let s = idx(sx, y);
                for c in 0..CHANNELS {
                    horizontal[o + c] += wt * src[s + c] as f64;
                }
            }
        }
    }

    let mut out = vec![0u8; src.len()];
    for y in 0..h {
        for x in 0..w {
            let o = idx(x, y);
            let mut acc = [0.0f64; CHANNELS];
            for (t, wt) in kernel.iter().enumerate() {
                let sy = (y + t as i64 - r).clamp(0, h - 1);
                let s = idx(x, sy);
                for c in 0..CHANNELS {
                    acc[c] += wt * horizontal[s + c];
                }
            }
            for c in 0..CHANNELS {
                out[o + c] = acc[c].round().clamp(0.0, 255.0) as u8;
            }
        }
    }
    ImageBuffer::from_raw(img.width(), img.height(), out)
}

/// Replaces the face region by its blurred version. The blur only sees the
/// face crop; the rest of the image is untouched.
pub fn anonymize_gauss(
    img: &ImageBuffer,
    bbox: &BoundingBox,
    cfg: &GaussConfig,
) -> Result<ImageBuffer> {
    let face = img.crop(bbox)?;
    let blurred = gaussian_blur(&face, cfg)?;
    img.paste(&blurred, bbox)
}
