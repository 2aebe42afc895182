use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::raster::ImageBuffer;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PixelConfig {
    pub patch_size: u32,
}

impl Default for PixelConfig {
    fn default() -> Self {
        Self { patch_size: 8 }
    }
}

impl PixelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.patch_size == 0 {
            return Err(Error::InvalidConfig("pixel patch_size must be >= 1".into()));
        }
        Ok(())
    }
}

/// Rounded mean of `n` non-negative samples summing to `sum`, halves away
/// from zero.
fn rounded_mean(sum: u64, n: u64) -> u8 {
    ((2 * sum + n) / (2 * n)) as u8
}

/// Pixelates the face region: tiles of `patch_size` squared anchored at the
/// box's top-left corner, each set to its per-channel mean. Partial tiles at
/// the right and bottom edges average over their actual extent.
pub fn anonymize_pixel(
    img: &ImageBuffer,
    bbox: &BoundingBox,
    cfg: &PixelConfig,
) -> Result<ImageBuffer> {
    cfg.validate()?;
    let mut face = img.crop(bbox)?;
    let (w, h) = face.dimensions();
    let p = cfg.patch_size;
    for ty in (0..h).step_by(p as usize) {
        for tx in (0..w).step_by(p as usize) {
            let (x_end, y_end) = ((tx + p).min(w), (ty + p).min(h));
            let mut sums = [0u64; 3];
            for y in ty..y_end {
                for x in tx..x_end {
                    let px = face.pixel(x, y);
                    for c in 0..3 {
                        sums[c] += px[c] as u64;
                    }
                }
            }
            let n = ((x_end - tx) * (y_end - ty)) as u64;
            let mean = sums.map(|s| rounded_mean(s, n));
            for y in ty..y_end {
                for x in tx..x_end {
                    face.put_pixel(x, y, mean);
                }
            }
        }
    }
    img.paste(&face, bbox)
}
