//! Owned 8-bit RGB rasters and binary masks.

use std::path::Path;

use image::{ImageFormat, RgbImage};

use crate::error::{Error, Result};
use crate::geometry::BoundingBox;

pub const CHANNELS: usize = 3;

/// Row-major interleaved RGB raster.
#[derive(Clone, PartialEq, Eq)]
pub struct ImageBuffer {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl std::fmt::Debug for ImageBuffer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ImageBuffer")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl ImageBuffer {
    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Self {
        let n = width as usize * height as usize;
        let mut data = Vec::with_capacity(n * CHANNELS);
        for _ in 0..n {
            data.extend_from_slice(&rgb);
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn from_raw(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        let expected = width as usize * height as usize * CHANNELS;
        if data.len() != expected {
            return Err(Error::InvalidGeometry(format!(
                "{width}x{height} RGB raster needs {expected} samples, got {}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Builds a raster by evaluating `f(x, y)` for every pixel.
    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> [u8; 3]) -> Self {
        let mut data = Vec::with_capacity(width as usize * height as usize * CHANNELS);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn as_raw(&self) -> &[u8] {
        &self.data
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.data
    }

    fn offset(&self, x: u32, y: u32) -> usize {
        (y as usize * self.width as usize + x as usize) * CHANNELS
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let o = self.offset(x, y);
        [self.data[o], self.data[o + 1], self.data[o + 2]]
    }

    pub fn put_pixel(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let o = self.offset(x, y);
        self.data[o..o + CHANNELS].copy_from_slice(&rgb);
    }

    pub fn row(&self, y: u32) -> &[u8] {
        let start = self.offset(0, y);
        &self.data[start..start + self.width as usize * CHANNELS]
    }

    pub fn bounds(&self) -> Option<BoundingBox> {
        BoundingBox::new(0, 0, self.width as i64, self.height as i64).ok()
    }

    fn check_inside(&self, bbox: &BoundingBox) -> Result<()> {
        if bbox.is_degenerate() || !bbox.fits_in(self.width, self.height) {
            return Err(Error::InvalidGeometry(format!(
                "box {bbox} not inside {}x{} image",
                self.width, self.height
            )));
        }
        Ok(())
    }

    /// Copies the region under `bbox` into a new raster.
    pub fn crop(&self, bbox: &BoundingBox) -> Result<ImageBuffer> {
        self.check_inside(bbox)?;
        let w = bbox.width() as usize;
        let mut data = Vec::with_capacity(w * bbox.height() as usize * CHANNELS);
        for y in bbox.y0..bbox.y1 {
            let start = self.offset(bbox.x0 as u32, y as u32);
            data.extend_from_slice(&self.data[start..start + w * CHANNELS]);
        }
        Ok(ImageBuffer {
            width: w as u32,
            height: bbox.height() as u32,
            data,
        })
    }

    /// Overwrites the region under `bbox` with `patch`.
    pub fn paste_in_place(&mut self, patch: &ImageBuffer, bbox: &BoundingBox) -> Result<()> {
        self.check_inside(bbox)?;
        if patch.width as i64 != bbox.width() || patch.height as i64 != bbox.height() {
            return Err(Error::InvalidGeometry(format!(
                "patch {}x{} does not match box {bbox}",
                patch.width, patch.height
            )));
        }
        let w = patch.width as usize * CHANNELS;
        for (row, y) in (bbox.y0..bbox.y1).enumerate() {
            let dst = self.offset(bbox.x0 as u32, y as u32);
            let src = row * w;
            self.data[dst..dst + w].copy_from_slice(&patch.data[src..src + w]);
        }
        Ok(())
    }

    pub fn paste(&self, patch: &ImageBuffer, bbox: &BoundingBox) -> Result<ImageBuffer> {
        let mut out = self.clone();
        out.paste_in_place(patch, bbox)?;
        Ok(out)
    }

    pub fn resize(&self, out_w: u32, out_h: u32) -> Result<ImageBuffer> {
        resize(self, out_w, out_h)
    }

    pub fn load(path: &Path) -> Result<ImageBuffer> {
        let img = image::open(path)?.to_rgb8();
        Ok(Self::from_rgb_image(img))
    }

    pub fn decode(bytes: &[u8]) -> Result<ImageBuffer> {
        let img = image::load_from_memory(bytes)?.to_rgb8();
        Ok(Self::from_rgb_image(img))
    }

    fn from_rgb_image(img: RgbImage) -> ImageBuffer {
        let (width, height) = img.dimensions();
        ImageBuffer {
            width,
            height,
            data: img.into_raw(),
        }
    }

    fn to_rgb_image(&self) -> RgbImage {
        RgbImage::from_raw(self.width, self.height, self.data.clone())
            .expect("buffer length checked at construction")
    }

    pub fn save(&self, path: &Path, format: ImageFormat) -> Result<()> {
        self.to_rgb_image().save_with_format(path, format)?;
        Ok(())
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        self.save(path, ImageFormat::Png)
    }
}

/// Bilinear resize with half-pixel-centre sampling. Source coordinates are
/// clamped at the borders and results rounded half away from zero, so a
/// constant image stays constant and same-size resizing is an exact copy.
pub fn resize(img: &ImageBuffer, out_w: u32, out_h: u32) -> Result<ImageBuffer> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::InvalidGeometry(format!(
            "resize target {out_w}x{out_h}"
        )));
    }
    if img.width == 0 || img.height == 0 {
        return Err(Error::InvalidGeometry("resize of an empty raster".into()));
    }
    if (out_w, out_h) == img.dimensions() {
        return Ok(img.clone());
    }
    let xs = sample_positions(img.width, out_w);
    let ys = sample_positions(img.height, out_h);

    let mut data = Vec::with_capacity(out_w as usize * out_h as usize * CHANNELS);
    for &(y0, y1, fy) in &ys {
        let top = img.row(y0);
        let bottom = img.row(y1);
        for &(x0, x1, fx) in &xs {
            let (a, b) = (x0 as usize * CHANNELS, x1 as usize * CHANNELS);
            for c in 0..CHANNELS {
                let upper = (1.0 - fx) * top[a + c] as f64 + fx * top[b + c] as f64;
                let lower = (1.0 - fx) * bottom[a + c] as f64 + fx * bottom[b + c] as f64;
                let v = (1.0 - fy) * upper + fy * lower;
                data.push(v.round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    Ok(ImageBuffer {
        width: out_w,
        height: out_h,
        data,
    })
}

/// For each output index: the two source taps and the weight of the second.
fn sample_positions(src: u32, dst: u32) -> Vec<(u32, u32, f64)> {
    let scale = src as f64 / dst as f64;
    let last = (src - 1) as f64;
    (0..dst)
        .map(|i| {
            let s = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, last);
            let i0 = s.floor();
            let i1 = (i0 + 1.0).min(last);
            (i0 as u32, i1 as u32, s - i0)
        })
        .collect()
}

/// Binary raster; `true` marks pixels the inpainter may regenerate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: u32,
    height: u32,
    data: Vec<bool>,
}

impl Mask {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            data: vec![false; width as usize * height as usize],
        }
    }

    /// Mask with exactly the pixels of `bbox` set (clipped to the mask).
    pub fn from_box(width: u32, height: u32, bbox: &BoundingBox) -> Self {
        let mut m = Self::new(width, height);
        if let Some(b) = bbox.clip(width, height) {
            for y in b.y0..b.y1 {
                for x in b.x0..b.x1 {
                    m.set(x as u32, y as u32, true);
                }
            }
        }
        m
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.data[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, v: bool) {
        let w = self.width as usize;
        self.data[y as usize * w + x as usize] = v;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }

    /// Grayscale rendering: 255 where set, 0 elsewhere.
    pub fn to_luma(&self) -> image::GrayImage {
        let raw = self.data.iter().map(|&v| if v { 255 } else { 0 }).collect();
        image::GrayImage::from_raw(self.width, self.height, raw).expect("mask length")
    }
}
