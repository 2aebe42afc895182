#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anonypipe_core::{BoundingBox, DetectionManifest, FaceDetection, ImageBuffer, ManifestEntry};
use tempfile::TempDir;

pub const W: u32 = 96;
pub const H: u32 = 64;

/// Textured image that differs per `seed` and never contains pure white.
pub fn synth_image(w: u32, h: u32, seed: u32) -> ImageBuffer {
    ImageBuffer::from_fn(w, h, |x, y| {
        let v = x.wrapping_mul(31) ^ y.wrapping_mul(17) ^ seed.wrapping_mul(101);
        [
            (v % 200) as u8,
            ((x + seed) * 3 % 251) as u8,
            ((y * 5 + seed) % 240) as u8,
        ]
    })
}

/// 1 to 3 faces for image `i`, inside a `W x H` frame.
pub fn synth_faces(i: u32) -> Vec<FaceDetection> {
    (0..1 + i % 3)
        .map(|k| {
            let x = 4 + 30 * k as i64;
            let y = 8 + (i % 3) as i64 * 4;
            let b = BoundingBox::new(x, y, x + 20, y + 18 + k as i64).unwrap();
            FaceDetection::new(b, 0.9 - 0.1 * k as f64).unwrap()
        })
        .collect()
}

pub struct Fixture {
    pub dir: TempDir,
    pub input: PathBuf,
    pub output: PathBuf,
    pub sidecar: PathBuf,
    pub config: PathBuf,
    pub faces: DetectionManifest,
}

impl Fixture {
    /// `n` PNG images under `input/` (the odd ones in a subdirectory) with a
    /// sidecar manifest and a config for `method` plus `extra` TOML lines.
    pub fn new(n: u32, method: &str, extra: &str) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("input");
        fs::create_dir_all(input.join("sub")).unwrap();
        let mut entries = Vec::new();
        for i in 0..n {
            let id = if i % 2 == 0 {
                format!("img_{i:02}.png")
            } else {
                format!("sub/img_{i:02}.png")
            };
            synth_image(W, H, i).save_png(&input.join(&id)).unwrap();
            entries.push(ManifestEntry {
                image_path: id,
                image_w: W,
                image_h: H,
                faces: synth_faces(i),
            });
        }
        let faces = DetectionManifest::new(entries).unwrap();
        let sidecar = dir.path().join("sidecar.json");
        faces.save(&sidecar).unwrap();
        let output = dir.path().join("output");
        let config = dir.path().join("run.toml");
        let mut f = Self {
            dir,
            input,
            output,
            sidecar,
            config,
            faces,
        };
        f.write_config(method, extra);
        f
    }

    pub fn write_config(&mut self, method: &str, extra: &str) {
        let text = format!(
            "method = \"{method}\"\ninput_dir = \"input\"\noutput_dir = \"output\"\n{extra}\n\n[detector.stub]\nsidecar_path = \"sidecar.json\"\n"
        );
        fs::write(&self.config, text).unwrap();
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.dir.path().join(rel)
    }

    pub fn anonymize(&self, extra_args: &[&str]) -> i32 {
        let mut args = vec!["anonymize", "--config", self.config.to_str().unwrap()];
        args.extend_from_slice(extra_args);
        run(&args)
    }

    pub fn input_image(&self, id: &str) -> ImageBuffer {
        ImageBuffer::load(&self.input.join(id)).unwrap()
    }

    pub fn output_image(&self, id: &str) -> ImageBuffer {
        ImageBuffer::load(&self.output.join(id)).unwrap()
    }
}

pub fn run(args: &[&str]) -> i32 {
    anonypipe_cli::run(std::iter::once("anonypipe").chain(args.iter().copied()))
}

/// Relative path -> bytes for every file under `root`.
pub fn tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for e in fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                let rel = p
                    .strip_prefix(root)
                    .unwrap()
                    .to_string_lossy()
                    .replace('\\', "/");
                out.insert(rel, fs::read(&p).unwrap());
            }
        }
    }
    if root.exists() {
        walk(root, root, &mut out);
    }
    out
}
