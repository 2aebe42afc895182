//! Embedding distance between original and anonymized faces, and the
//! histogram used to report its distribution.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::backends::EmbedBackend;
use crate::detection::FaceDetection;
use crate::error::{Error, Result};
use crate::raster::ImageBuffer;

fn unit(v: &[f64]) -> Result<Vec<f64>> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Evaluation(
            "embedding contains non-finite values".into(),
        ));
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::UndefinedDirection);
    }
    Ok(v.iter().map(|x| x / norm).collect())
}

/// Euclidean distance between the L2-normalized vectors; lies in [0, 2].
pub fn embedding_l2(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Evaluation(format!(
            "embedding dimensions differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let (ua, ub) = (unit(a)?, unit(b)?);
    let d = ua
        .iter()
        .zip(&ub)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    // rounding can push antipodal pairs a few ulps past 2
    Ok(d.min(2.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingDistanceRecord {
    pub image_path: String,
    pub face_index: usize,
    pub l2_distance: f64,
}

/// Distance between each face of `original` and the same box cut from
/// `anonymized`.
pub fn face_distances(
    original: &ImageBuffer,
    anonymized: &ImageBuffer,
    image_path: &str,
    faces: &[FaceDetection],
    embedder: &dyn EmbedBackend,
) -> Result<Vec<EmbeddingDistanceRecord>> {
    if original.dimensions() != anonymized.dimensions() {
        return Err(Error::Evaluation(format!(
            "{image_path}: anonymized image is {}x{}, original {}x{}",
            anonymized.width(),
            anonymized.height(),
            original.width(),
            original.height()
        )));
    }
    faces
        .iter()
        .enumerate()
        .map(|(face_index, f)| {
            let a = embedder.embed(&original.crop(&f.bbox)?)?;
            let b = embedder.embed(&anonymized.crop(&f.bbox)?)?;
            Ok(EmbeddingDistanceRecord {
                image_path: image_path.to_string(),
                face_index,
                l2_distance: embedding_l2(&a, &b)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub bin_left: f64,
    pub bin_right: f64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bins: Vec<HistogramBin>,
    /// Values below `lo`, above `hi`, or NaN.
    pub overflow: u64,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.bins.iter().map(|b| b.count).sum::<u64>() + self.overflow
    }

    /// `bin_left,bin_right,count` with a header row.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("bin_left,bin_right,count\n");
        for b in &self.bins {
            let _ = writeln!(s, "{},{},{}", b.bin_left, b.bin_right, b.count);
        }
        s
    }

    /// Minimal standalone SVG bar chart.
    pub fn to_svg(&self, title: &str) -> String {
        let (w, h, margin) = (640.0, 360.0, 40.0);
        let max = self.bins.iter().map(|b| b.count).max().unwrap_or(0).max(1) as f64;
        let bar_w = (w - 2.0 * margin) / self.bins.len().max(1) as f64;
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="20" text-anchor="middle" font-family="sans-serif" font-size="14">{}</text>"#,
            w / 2.0,
            xml_escape(title)
        );
        for (i, b) in self.bins.iter().enumerate() {
            let bh = (h - 2.0 * margin) * b.count as f64 / max;
            let _ = writeln!(
                s,
                r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#4878a8"><title>[{}, {}): {}</title></rect>"##,
                margin + i as f64 * bar_w,
                h - margin - bh,
                (bar_w - 1.0).max(0.5),
                bh,
                b.bin_left,
                b.bin_right,
                b.count
            );
        }
        if let (Some(first), Some(last)) = (self.bins.first(), self.bins.last()) {
            let _ = writeln!(
                s,
                r#"<text x="{margin}" y="{}" font-family="sans-serif" font-size="11">{}</text>"#,
                h - margin + 15.0,
                first.bin_left
            );
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="end" font-family="sans-serif" font-size="11">{}</text>"#,
                w - margin,
                h - margin + 15.0,
                last.bin_right
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Equal-width histogram over `[lo, hi]`; `hi` itself lands in the last bin.
pub fn histogram(values: &[f64], bins: usize, lo: f64, hi: f64) -> Result<Histogram> {
    if bins == 0 {
        return Err(Error::InvalidConfig(
            "histogram needs at least one bin".into(),
        ));
    }
    if !lo.is_finite() || !hi.is_finite() || lo >= hi {
        return Err(Error::InvalidConfig(format!(
            "histogram range [{lo}, {hi}] is empty"
        )));
    }
    let width = (hi - lo) / bins as f64;
    let mut out: Vec<HistogramBin> = (0..bins)
        .map(|i| HistogramBin {
            bin_left: lo + i as f64 * width,
            bin_right: if i + 1 == bins {
                hi
            } else {
                lo + (i + 1) as f64 * width
            },
            count: 0,
        })
        .collect();
    let mut overflow = 0;
    for &v in values {
        if !(lo..=hi).contains(&v) {
            overflow += 1;
            continue;
        }
        let idx = (((v - lo) / (hi - lo)) * bins as f64).floor() as usize;
        out[idx.min(bins - 1)].count += 1;
    }
    Ok(Histogram {
        bins: out,
        overflow,
    })
}
