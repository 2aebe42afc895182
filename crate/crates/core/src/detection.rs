//! Face detections and the per-dataset detection manifest.
//!
//! The manifest is the on-disk exchange format between detection runs,
//! anonymization runs and the evaluators:
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "entries": [
//!     {
//!       "image_path": "aachen/aachen_000000.png",
//!       "image_w": 2048,
//!       "image_h": 1024,
//!       "faces": [{ "box": [100, 100, 150, 160], "confidence": 0.9731, "size_category": "M" }]
//!     }
//!   ]
//! }
//! ```

use std::cmp::Ordering;
use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::backends::DetectorBackend;
use crate::error::{Error, Result};
use crate::geometry::{BoundingBox, SizeCategory};
use crate::raster::ImageBuffer;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

/// Default detector confidence threshold; low to favour recall.
pub const DEFAULT_THRESHOLD: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FaceRecordIn", into = "FaceRecordOut")]
pub struct FaceDetection {
    pub bbox: BoundingBox,
    pub confidence: f64,
}

impl FaceDetection {
    pub fn new(bbox: BoundingBox, confidence: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&confidence) {
            return Err(Error::InvalidGeometry(format!(
                "confidence {confidence} outside [0, 1]"
            )));
        }
        Ok(Self { bbox, confidence })
    }

    pub fn size_category(&self) -> SizeCategory {
        self.bbox.size_category()
    }
}

/// Total processing order: confidence descending, then top-to-bottom,
/// then left-to-right.
pub fn processing_order(a: &FaceDetection, b: &FaceDetection) -> Ordering {
    b.confidence
        .total_cmp(&a.confidence)
        .then(a.bbox.y0.cmp(&b.bbox.y0))
        .then(a.bbox.x0.cmp(&b.bbox.x0))
        .then(a.bbox.y1.cmp(&b.bbox.y1))
        .then(a.bbox.x1.cmp(&b.bbox.x1))
}

pub fn sort_detections(faces: &mut [FaceDetection]) {
    faces.sort_by(processing_order);
}

// Wire form of a face. Confidence is emitted with at least four fractional
// digits while still round-tripping to the same f64.
#[derive(Serialize)]
struct FaceRecordOut {
    #[serde(rename = "box")]
    bbox: BoundingBox,
    confidence: Box<RawValue>,
    size_category: SizeCategory,
}

#[derive(Deserialize)]
struct FaceRecordIn {
    #[serde(rename = "box")]
    bbox: BoundingBox,
    confidence: f64,
    size_category: SizeCategory,
}

pub(crate) fn format_confidence(c: f64) -> String {
    let mut s = format!("{c}");
    match s.find('.') {
        Some(dot) => {
            let frac = s.len() - dot - 1;
            for _ in frac..4 {
                s.push('0');
            }
        }
        None => s.push_str(".0000"),
    }
    s
}

impl From<FaceDetection> for FaceRecordOut {
    fn from(f: FaceDetection) -> Self {
        let confidence = RawValue::from_string(format_confidence(f.confidence))
            .expect("finite decimal is valid json");
        FaceRecordOut {
            bbox: f.bbox,
            confidence,
            size_category: f.size_category(),
        }
    }
}

impl TryFrom<FaceRecordIn> for FaceDetection {
    type Error = Error;

    fn try_from(r: FaceRecordIn) -> Result<Self> {
        let face = FaceDetection::new(r.bbox, r.confidence)?;
        if face.size_category() != r.size_category {
            return Err(Error::Manifest(format!(
                "size_category {} inconsistent with box {} (area {})",
                r.size_category.code(),
                r.bbox,
                r.bbox.area()
            )));
        }
        Ok(face)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub image_path: String,
    pub image_w: u32,
    pub image_h: u32,
    pub faces: Vec<FaceDetection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionManifest {
    pub schema_version: u32,
    pub entries: Vec<ManifestEntry>,
}

impl Default for DetectionManifest {
    fn default() -> Self {
        Self {
            schema_version: MANIFEST_SCHEMA_VERSION,
            entries: Vec::new(),
        }
    }
}

impl DetectionManifest {
    pub fn new(mut entries: Vec<ManifestEntry>) -> Result<Self> {
        entries.sort_by(|a, b| a.image_path.cmp(&b.image_path));
        let m = Self {
            schema_version: MANIFEST_SCHEMA_VERSION,
            entries,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != MANIFEST_SCHEMA_VERSION {
            return Err(Error::Manifest(format!(
                "unsupported schema_version {}",
                self.schema_version
            )));
        }
        let mut seen = HashSet::new();
        for e in &self.entries {
            if !seen.insert(e.image_path.as_str()) {
                return Err(Error::Manifest(format!(
                    "duplicate image_path {}",
                    e.image_path
                )));
            }
            for f in &e.faces {
                if !f.bbox.fits_in(e.image_w, e.image_h) {
                    return Err(Error::Manifest(format!(
                        "{}: box {} outside {}x{} image",
                        e.image_path, f.bbox, e.image_w, e.image_h
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn entry(&self, image_path: &str) -> Option<&ManifestEntry> {
        self.entries.iter().find(|e| e.image_path == image_path)
    }

    pub fn face_count(&self) -> usize {
        self.entries.iter().map(|e| e.faces.len()).sum()
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: DetectionManifest = serde_json::from_str(s)?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

/// Number of faces recorded across the whole manifest.
pub fn count_noa(manifest: &DetectionManifest) -> usize {
    manifest.face_count()
}

/// Runs `backend` on `img`, keeps detections with confidence at or above
/// `threshold`, clips them to the image and sorts them into processing
/// order. Detections entirely outside the image are dropped.
pub fn detect_faces(
    img: &ImageBuffer,
    image_id: &str,
    backend: &dyn DetectorBackend,
    threshold: f64,
) -> Result<Vec<FaceDetection>> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidConfig(format!(
            "threshold {threshold} outside [0, 1]"
        )));
    }
    let raw = backend
        .detect(img, image_id)
        .map_err(|source| Error::Detection {
            image: image_id.to_string(),
            source,
        })?;
    let mut faces: Vec<FaceDetection> = raw
        .into_iter()
        .filter(|f| f.confidence >= threshold)
        .filter_map(|f| {
            f.bbox
                .clip(img.width(), img.height())
                .map(|bbox| FaceDetection {
                    bbox,
                    confidence: f.confidence,
                })
        })
        .collect();
    sort_detections(&mut faces);
    Ok(faces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::stub::SidecarDetector;

    fn face(x0: i64, y0: i64, x1: i64, y1: i64, c: f64) -> FaceDetection {
        FaceDetection::new(BoundingBox::new(x0, y0, x1, y1).unwrap(), c).unwrap()
    }

    fn detector(faces: Vec<FaceDetection>) -> SidecarDetector {
        let m = DetectionManifest::new(vec![ManifestEntry {
            image_path: "img.png".into(),
            image_w: 64,
            image_h: 64,
            faces,
        }])
        .unwrap();
        SidecarDetector::new(m)
    }

    #[test]
    fn threshold_filters() {
        let img = ImageBuffer::filled(64, 64, [0; 3]);
        let det = detector(vec![
            face(0, 0, 10, 10, 0.9),
            face(10, 10, 20, 20, 0.41),
            face(20, 20, 30, 30, 0.39),
        ]);
        assert_eq!(detect_faces(&img, "img.png", &det, 0.4).unwrap().len(), 2);
        assert_eq!(detect_faces(&img, "img.png", &det, 0.0).unwrap().len(), 3);
    }

    #[test]
    fn empty_backend_output() {
        let img = ImageBuffer::filled(64, 64, [0; 3]);
        let det = detector(vec![]);
        assert!(detect_faces(&img, "img.png", &det, 0.4).unwrap().is_empty());
    }

    #[test]
    fn bad_threshold() {
        let img = ImageBuffer::filled(64, 64, [0; 3]);
        let det = detector(vec![]);
        assert!(matches!(
            detect_faces(&img, "img.png", &det, 1.1),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn sorted_by_confidence_then_position() {
        let img = ImageBuffer::filled(64, 64, [0; 3]);
        let det = detector(vec![
            face(30, 5, 40, 15, 0.5),
            face(0, 5, 10, 15, 0.5),
            face(0, 0, 10, 4, 0.5),
            face(50, 50, 60, 60, 0.8),
        ]);
        let out = detect_faces(&img, "img.png", &det, 0.0).unwrap();
        let order: Vec<(i64, i64)> = out.iter().map(|f| (f.bbox.x0, f.bbox.y0)).collect();
        assert_eq!(order, vec![(50, 50), (0, 0), (0, 5), (30, 5)]);
    }

    #[test]
    fn noa_counts() {
        assert_eq!(count_noa(&DetectionManifest::default()), 0);
        let e = |p: &str, n: usize| ManifestEntry {
            image_path: p.into(),
            image_w: 100,
            image_h: 100,
            faces: (0..n)
                .map(|i| face(i as i64 * 10, 0, i as i64 * 10 + 5, 5, 0.5))
                .collect(),
        };
        let m = DetectionManifest::new(vec![e("a", 2), e("b", 3)]).unwrap();
        assert_eq!(count_noa(&m), 5);
    }

    #[test]
    fn confidence_formatting() {
        assert_eq!(format_confidence(0.9), "0.9000");
        assert_eq!(format_confidence(1.0), "1.0000");
        assert_eq!(format_confidence(0.0), "0.0000");
        assert_eq!(format_confidence(0.123456789), "0.123456789");
    }

    #[test]
    fn manifest_json_shape() {
        let m = DetectionManifest::new(vec![ManifestEntry {
            image_path: "x.png".into(),
            image_w: 2048,
            image_h: 1024,
            faces: vec![face(100, 100, 150, 160, 0.9)],
        }])
        .unwrap();
        let json = m.to_json().unwrap();
        assert!(json.contains("\"confidence\": 0.9000"));
        // 50 x 60 = 3000 px -> medium
        assert!(json.contains("\"size_category\": \"M\""));
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["schema_version"], 1);
        assert_eq!(
            v["entries"][0]["faces"][0]["box"],
            serde_json::json!([100, 100, 150, 160])
        );
        assert_eq!(DetectionManifest::from_json(&json).unwrap(), m);
    }

    #[test]
    fn manifest_rejects_inconsistent_category() {
        let json = r#"{"schema_version":1,"entries":[{"image_path":"a","image_w":100,"image_h":100,
            "faces":[{"box":[0,0,10,10],"confidence":0.5,"size_category":"L"}]}]}"#;
        assert!(DetectionManifest::from_json(json).is_err());
    }

    #[test]
    fn manifest_rejects_out_of_bounds_and_duplicates() {
        let oob = r#"{"schema_version":1,"entries":[{"image_path":"a","image_w":5,"image_h":5,
            "faces":[{"box":[0,0,10,10],"confidence":0.5,"size_category":"S"}]}]}"#;
        assert!(DetectionManifest::from_json(oob).is_err());
        let dup = r#"{"schema_version":1,"entries":[
            {"image_path":"a","image_w":5,"image_h":5,"faces":[]},
            {"image_path":"a","image_w":5,"image_h":5,"faces":[]}]}"#;
        assert!(DetectionManifest::from_json(dup).is_err());
    }
}
