//! Directory-tree datasets: image discovery, path mapping and label rasters.

use std::path::{Path, PathBuf};

use image::DynamicImage;
use walkdir::WalkDir;

use crate::error::{CliError, CliResult};

const IMAGE_EXTENSIONS: [&str; 3] = ["png", "jpg", "jpeg"];

/// An image file and its dataset id (relative path, `/`-separated).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetImage {
    pub id: String,
    pub path: PathBuf,
}

fn has_extension(path: &Path, allowed: &[&str]) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| allowed.iter().any(|a| a.eq_ignore_ascii_case(e)))
}

fn relative_id(root: &Path, path: &Path) -> CliResult<String> {
    let rel = path.strip_prefix(root).map_err(|_| {
        CliError::failure(format!("{} not under {}", path.display(), root.display()))
    })?;
    let parts: Option<Vec<&str>> = rel.components().map(|c| c.as_os_str().to_str()).collect();
    parts
        .map(|p| p.join("/"))
        .ok_or_else(|| CliError::failure(format!("non UTF-8 path {}", path.display())))
}

fn list_files(root: &Path, extensions: &[&str]) -> CliResult<Vec<DatasetImage>> {
    if !root.is_dir() {
        return Err(CliError::usage(format!(
            "input directory {} does not exist",
            root.display()
        )));
    }
    let mut out = Vec::new();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| CliError::failure(e.to_string()))?;
        if entry.file_type().is_file() && has_extension(entry.path(), extensions) {
            out.push(DatasetImage {
                id: relative_id(root, entry.path())?,
                path: entry.into_path(),
            });
        }
    }
    out.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(out)
}

/// PNG and JPEG files under `root`, sorted by id.
pub fn list_images(root: &Path) -> CliResult<Vec<DatasetImage>> {
    list_files(root, &IMAGE_EXTENSIONS)
}

/// PNG files under `root`, sorted by id.
pub fn list_pngs(root: &Path) -> CliResult<Vec<DatasetImage>> {
    list_files(root, &["png"])
}

/// Output id for an input id: same relative path, extension replaced.
pub fn output_id(id: &str, extension: &str) -> String {
    let stem_end = match (id.rfind('.'), id.rfind('/')) {
        (Some(dot), Some(slash)) if dot > slash => dot,
        (Some(dot), None) => dot,
        _ => id.len(),
    };
    format!("{}.{extension}", &id[..stem_end])
}

pub fn resolve(root: &Path, id: &str) -> PathBuf {
    id.split('/')
        .fold(root.to_path_buf(), |p, part| p.join(part))
}

/// Single-channel label raster from an 8- or 16-bit grayscale PNG.
pub fn load_labels(path: &Path) -> CliResult<(u32, u32, Vec<u32>)> {
    let img =
        image::open(path).map_err(|e| CliError::failure(format!("{}: {e}", path.display())))?;
    let (w, h) = (img.width(), img.height());
    let data = match img {
        DynamicImage::ImageLuma8(b) => b.into_raw().into_iter().map(u32::from).collect(),
        DynamicImage::ImageLuma16(b) => b.into_raw().into_iter().map(u32::from).collect(),
        other => {
            return Err(CliError::failure(format!(
                "{}: label rasters must be single-channel, got {:?}",
                path.display(),
                other.color()
            )))
        }
    };
    Ok((w, h, data))
}
