//! Integer pixel rectangles and face-size buckets.
//!
//! Boxes are half-open: `[x0, x1) x [y0, y1)`. Width and height are plain
//! differences and areas are exact integer products.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Area below which a face is `Small` (32 x 32).
pub const SMALL_AREA_LIMIT: u64 = 32 * 32;
/// Area from which a face is `Large` (96 x 96).
pub const LARGE_AREA_LIMIT: u64 = 96 * 96;

/// Non-degenerate half-open pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "[i64; 4]", into = "[i64; 4]")]
pub struct BoundingBox {
    pub x0: i64,
    pub y0: i64,
    pub x1: i64,
    pub y1: i64,
}

impl BoundingBox {
    pub fn new(x0: i64, y0: i64, x1: i64, y1: i64) -> Result<Self> {
        if x0 >= x1 || y0 >= y1 {
            return Err(Error::InvalidGeometry(format!(
                "degenerate box ({x0},{y0},{x1},{y1})"
            )));
        }
        Ok(Self { x0, y0, x1, y1 })
    }

    /// Box with top-left corner `(x, y)` and the given extent.
    pub fn from_xywh(x: i64, y: i64, w: i64, h: i64) -> Result<Self> {
        Self::new(x, y, x + w, y + h)
    }

    pub fn width(&self) -> i64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> i64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> u64 {
        (self.width() as u64) * (self.height() as u64)
    }

    pub fn is_degenerate(&self) -> bool {
        self.x0 >= self.x1 || self.y0 >= self.y1
    }

    pub fn contains_box(&self, other: &BoundingBox) -> bool {
        self.x0 <= other.x0 && self.y0 <= other.y0 && self.x1 >= other.x1 && self.y1 >= other.y1
    }

    pub fn contains_point(&self, x: i64, y: i64) -> bool {
        x >= self.x0 && x < self.x1 && y >= self.y0 && y < self.y1
    }

    pub fn fits_in(&self, width: u32, height: u32) -> bool {
        self.x0 >= 0 && self.y0 >= 0 && self.x1 <= width as i64 && self.y1 <= height as i64
    }

    /// Overlap with `other`, or `None` when the boxes do not intersect.
    pub fn intersection(&self, other: &BoundingBox) -> Option<BoundingBox> {
        let b = BoundingBox {
            x0: self.x0.max(other.x0),
            y0: self.y0.max(other.y0),
            x1: self.x1.min(other.x1),
            y1: self.y1.min(other.y1),
        };
        (!b.is_degenerate()).then_some(b)
    }

    pub fn iou(&self, other: &BoundingBox) -> f64 {
        let inter = self.intersection(other).map_or(0, |b| b.area());
        if inter == 0 {
            return 0.0;
        }
        let union = self.area() + other.area() - inter;
        inter as f64 / union as f64
    }

    /// Clips the box to `[0, width) x [0, height)`. Returns `None` when
    /// nothing of the box remains inside the image.
    pub fn clip(&self, width: u32, height: u32) -> Option<BoundingBox> {
        let b = BoundingBox {
            x0: self.x0.clamp(0, width as i64),
            y0: self.y0.clamp(0, height as i64),
            x1: self.x1.clamp(0, width as i64),
            y1: self.y1.clamp(0, height as i64),
        };
        (!b.is_degenerate()).then_some(b)
    }

    pub fn size_category(&self) -> SizeCategory {
        SizeCategory::from_area(self.area())
    }

    pub fn to_array(self) -> [i64; 4] {
        [self.x0, self.y0, self.x1, self.y1]
    }
}

impl TryFrom<[i64; 4]> for BoundingBox {
    type Error = Error;

    fn try_from(v: [i64; 4]) -> Result<Self> {
        BoundingBox::new(v[0], v[1], v[2], v[3])
    }
}

impl From<BoundingBox> for [i64; 4] {
    fn from(b: BoundingBox) -> Self {
        b.to_array()
    }
}

impl std::fmt::Display for BoundingBox {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{},{},{})", self.x0, self.y0, self.x1, self.y1)
    }
}

/// Grows `bbox` by `pad` pixels on every side and clips the result to the
/// image. The result always contains the input box.
pub fn pad_and_clip(
    bbox: BoundingBox,
    pad: u32,
    image_w: u32,
    image_h: u32,
) -> Result<BoundingBox> {
    if bbox.is_degenerate() {
        return Err(Error::InvalidGeometry(format!("degenerate box {bbox}")));
    }
    if !bbox.fits_in(image_w, image_h) {
        return Err(Error::InvalidGeometry(format!(
            "box {bbox} outside {image_w}x{image_h} image"
        )));
    }
    let pad = pad as i64;
    let grown = BoundingBox {
        x0: bbox.x0 - pad,
        y0: bbox.y0 - pad,
        x1: bbox.x1 + pad,
        y1: bbox.y1 + pad,
    };
    // the input box is inside the image, so the clipped box is never empty
    Ok(grown.clip(image_w, image_h).expect("non-empty after clip"))
}

/// Face-size bucket by box area.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SizeCategory {
    #[serde(rename = "S")]
    Small,
    #[serde(rename = "M")]
    Medium,
    #[serde(rename = "L")]
    Large,
}

impl SizeCategory {
    pub const ALL: [SizeCategory; 3] = [
        SizeCategory::Small,
        SizeCategory::Medium,
        SizeCategory::Large,
    ];

    pub fn from_area(area: u64) -> Self {
        if area < SMALL_AREA_LIMIT {
            SizeCategory::Small
        } else if area < LARGE_AREA_LIMIT {
            SizeCategory::Medium
        } else {
            SizeCategory::Large
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            SizeCategory::Small => "S",
            SizeCategory::Medium => "M",
            SizeCategory::Large => "L",
        }
    }
}

pub fn size_category(bbox: &BoundingBox) -> SizeCategory {
    bbox.size_category()
}
