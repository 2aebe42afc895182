use crate::error::Result;
use crate::geometry::BoundingBox;
use crate::raster::ImageBuffer;

/// Fill value for cropped faces: the channel maximum.
pub const CROP_FILL: [u8; 3] = [255, 255, 255];

/// Replaces every sample inside `bbox` with 255.
pub fn anonymize_crop(img: &ImageBuffer, bbox: &BoundingBox) -> Result<ImageBuffer> {
    let fill = ImageBuffer::filled(bbox.width() as u32, bbox.height() as u32, CROP_FILL);
    img.paste(&fill, bbox)
}
