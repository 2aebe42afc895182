mod common;
#[path = "../../core/tests/oracles/mod.rs"]
mod oracles;

use std::fs;
use std::process::Command;

use anonypipe_cli::{ImageStatus, RunManifest};
use anonypipe_core::metrics::{DetEvalReport, SegEvalReport};
use anonypipe_core::{BoundingBox, DetectionManifest, FaceDetection, ManifestEntry};
use common::{run, tree, Fixture, H, W};

fn run_manifest(f: &Fixture) -> RunManifest {
    RunManifest::load(&f.output.join("run_manifest.json")).unwrap()
}

#[test]
fn anonymize_empty_input() {
    let f = Fixture::new(0, "crop", "");
    assert_eq!(f.anonymize(&[]), 0);
    let m = run_manifest(&f);
    assert!(m.images.is_empty());
    assert_eq!(m.noa, 0);
    assert_eq!(
        tree(&f.output).keys().collect::<Vec<_>>(),
        vec!["run_manifest.json"]
    );
}

#[test]
fn anonymize_crop_whitens_faces() {
    let f = Fixture::new(2, "crop", "");
    assert_eq!(f.anonymize(&[]), 0);
    let m = run_manifest(&f);
    assert_eq!(m.noa, f.faces.face_count());
    assert_eq!(m.faces_detected, f.faces.face_count());
    assert!(m.is_complete());
    for e in &f.faces.entries {
        let (orig, out) = (f.input_image(&e.image_path), f.output_image(&e.image_path));
        for y in 0..H {
            for x in 0..W {
                let inside = e
                    .faces
                    .iter()
                    .any(|fd| fd.bbox.contains_point(x as i64, y as i64));
                if inside {
                    assert_eq!(out.pixel(x, y), [255; 3]);
                } else {
                    assert_eq!(out.pixel(x, y), orig.pixel(x, y));
                }
            }
        }
    }
}

#[test]
fn anonymize_ldfa_identity_is_identity() {
    let f = Fixture::new(
        3,
        "ldfa",
        "[inpainter.stub]\nidentity = true\n[ldfa]\nmodel_resolution = 128",
    );
    assert_eq!(f.anonymize(&[]), 0);
    for e in &f.faces.entries {
        assert_eq!(f.output_image(&e.image_path), f.input_image(&e.image_path));
    }
    let m = run_manifest(&f);
    assert_eq!(m.backends.inpainter.as_ref().unwrap().name, "stub-identity");
    assert!(m.reproducible);
}

#[test]
fn anonymize_is_deterministic_across_runs_and_jobs() {
    let f = Fixture::new(5, "ldfa", "seed = 41\n[ldfa]\nmodel_resolution = 96");
    assert_eq!(f.anonymize(&["--jobs", "1"]), 0);
    let first = tree(&f.output);
    let first_manifest = run_manifest(&f).canonical();
    fs::remove_dir_all(&f.output).unwrap();
    assert_eq!(f.anonymize(&["--jobs", "4"]), 0);
    let mut second_manifest = run_manifest(&f).canonical();
    // the jobs override is part of the config snapshot
    second_manifest.config.jobs = 1;
    assert_eq!(second_manifest, first_manifest);
    let second = tree(&f.output);
    let images = |t: &std::collections::BTreeMap<String, Vec<u8>>| {
        t.iter()
            .filter(|(k, _)| k.ends_with(".png"))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect::<Vec<_>>()
    };
    assert_eq!(images(&first), images(&second));
    assert_eq!(images(&first).len(), 5);

    let rec = first_manifest.image("img_02.png").unwrap();
    assert_eq!(rec.face_seeds, vec![41, 42, 43]);
}

#[test]
fn anonymize_mirrors_tree_and_converts_to_png() {
    let f = Fixture::new(2, "pixel", "");
    let jpg = f.input.join("sub/extra.jpg");
    common::synth_image(W, H, 9)
        .save(&jpg, image::ImageFormat::Jpeg)
        .unwrap();
    assert_eq!(f.anonymize(&[]), 0);
    let out: Vec<String> = tree(&f.output).into_keys().collect();
    assert_eq!(
        out,
        vec![
            "img_00.png",
            "run_manifest.json",
            "sub/extra.png",
            "sub/img_01.png"
        ]
    );
    let m = run_manifest(&f);
    let rec = m.image("sub/extra.jpg").unwrap();
    assert_eq!(rec.output_path.as_deref(), Some("sub/extra.png"));
    assert_eq!(rec.faces_detected, 0);
    assert_eq!(rec.status, ImageStatus::Ok);
}

#[test]
fn anonymize_reports_partial_and_failed_images() {
    let mut f = Fixture::new(3, "ldfa", "");
    f.write_config(
        "ldfa",
        "[ldfa]\nmodel_resolution = 64\n[inpainter.stub]\nfail_faces = [\"sub/img_01.png#1\"]",
    );
    fs::write(f.input.join("broken.png"), b"not a png").unwrap();
    assert_eq!(f.anonymize(&[]), 1);
    let m = run_manifest(&f);
    assert_eq!(m.image("broken.png").unwrap().status, ImageStatus::Failed);
    let partial = m.image("sub/img_01.png").unwrap();
    assert_eq!(partial.status, ImageStatus::Partial);
    assert_eq!((partial.faces_detected, partial.faces_anonymized), (2, 1));
    assert_eq!(partial.face_errors[0].face_index, 1);
    assert_eq!(m.image("img_00.png").unwrap().status, ImageStatus::Ok);
    assert_eq!(m.noa, f.faces.face_count() - 1);
    assert_eq!(m.noa, m.detections.face_count());
    assert_eq!(
        (
            m.status_counts.ok,
            m.status_counts.partial,
            m.status_counts.failed
        ),
        (2, 1, 1)
    );
}

#[test]
fn anonymize_config_errors_exit_2() {
    let mut f = Fixture::new(1, "crop", "");
    assert_eq!(f.anonymize(&["--threshold", "1.1"]), 2);
    f.write_config("smudge", "");
    assert_eq!(f.anonymize(&[]), 2);
    f.write_config("pixel", "[pixel]\npatch_size = 0");
    assert_eq!(f.anonymize(&[]), 2);
    assert_eq!(run(&["anonymize"]), 2);
    assert_eq!(run(&["anonymize", "--config", "/nonexistent/run.toml"]), 2);
}

#[test]
fn detect_replays_sidecar() {
    let f = Fixture::new(4, "crop", "");
    let out = f.path("det.json");
    let out_s = out.to_str().unwrap();
    let input = f.input.to_str().unwrap();
    let cfg = f.config.to_str().unwrap();
    assert_eq!(
        run(&[
            "detect",
            input,
            "--config",
            cfg,
            "--threshold",
            "0",
            "--out",
            out_s
        ]),
        0
    );
    assert_eq!(DetectionManifest::load(&out).unwrap(), f.faces);
    let first = fs::read(&out).unwrap();
    assert_eq!(
        run(&[
            "detect",
            input,
            "--config",
            cfg,
            "--threshold",
            "0",
            "--out",
            out_s
        ]),
        0
    );
    assert_eq!(fs::read(&out).unwrap(), first);

    assert_eq!(
        run(&[
            "detect",
            input,
            "--config",
            cfg,
            "--threshold",
            "0.85",
            "--out",
            out_s
        ]),
        0
    );
    let high = DetectionManifest::load(&out).unwrap();
    assert_eq!(high.face_count(), 4);
    assert_eq!(
        run(&[
            "detect",
            input,
            "--config",
            cfg,
            "--threshold",
            "1.1",
            "--out",
            out_s
        ]),
        2
    );
}

fn face(x0: i64, y0: i64, x1: i64, y1: i64, c: f64) -> FaceDetection {
    FaceDetection::new(BoundingBox::new(x0, y0, x1, y1).unwrap(), c).unwrap()
}

fn manifest(faces: Vec<FaceDetection>) -> DetectionManifest {
    DetectionManifest::new(vec![ManifestEntry {
        image_path: "a.png".into(),
        image_w: 400,
        image_h: 400,
        faces,
    }])
    .unwrap()
}

fn eval_det(
    gt: &DetectionManifest,
    pred: &DetectionManifest,
    extra: &[&str],
) -> (i32, Option<DetEvalReport>) {
    let dir = tempfile::tempdir().unwrap();
    let (g, p, o) = (
        dir.path().join("g.json"),
        dir.path().join("p.json"),
        dir.path().join("r.json"),
    );
    gt.save(&g).unwrap();
    pred.save(&p).unwrap();
    let mut args = vec![
        "eval-det",
        g.to_str().unwrap(),
        p.to_str().unwrap(),
        "--out",
        o.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    let code = run(&args);
    let report = fs::read_to_string(&o)
        .ok()
        .map(|s| serde_json::from_str(&s).unwrap());
    (code, report)
}

#[test]
fn eval_det_reports() {
    let f = Fixture::new(4, "crop", "");
    let (code, r) = eval_det(&f.faces, &f.faces, &[]);
    assert_eq!(code, 0);
    let r = r.unwrap();
    assert_eq!(r.map, Some(1.0));
    assert_eq!(r.noa, f.faces.face_count());
    assert_eq!(r.schema_version, 1);

    let mut empty = f.faces.clone();
    for e in &mut empty.entries {
        e.faces.clear();
    }
    let (code, r) = eval_det(&f.faces, &empty, &[]);
    assert_eq!(code, 0);
    let r = r.unwrap();
    assert_eq!((r.map, r.noa), (Some(0.0), 0));

    let mut fewer = f.faces.clone();
    fewer.entries.pop();
    let (code, r) = eval_det(&f.faces, &fewer, &[]);
    assert_eq!((code, r), (1, None));
}

#[test]
fn eval_det_three_face_fixture_matches_oracle() {
    let gt = vec![
        face(10, 10, 40, 40, 1.0),
        face(100, 100, 140, 150, 1.0),
        face(200, 50, 300, 160, 1.0),
    ];
    let pred = vec![
        face(12, 11, 41, 42, 0.95),
        face(205, 60, 300, 170, 0.8),
        face(300, 300, 330, 330, 0.7),
        face(104, 100, 140, 146, 0.6),
        face(14, 14, 36, 36, 0.5),
    ];
    let (code, r) = eval_det(
        &manifest(gt.clone()),
        &manifest(pred.clone()),
        &["--iou-thresholds", "0.5,0.75,0.95"],
    );
    assert_eq!(code, 0);
    let r = r.unwrap();
    let expected: f64 = [0.5, 0.75, 0.95]
        .iter()
        .map(|&t| oracles::ap_oracle(&gt, &pred, t).unwrap())
        .sum::<f64>()
        / 3.0;
    assert!(
        (r.map.unwrap() - expected).abs() < 1e-12,
        "{:?} vs {expected}",
        r.map
    );
    assert_eq!((r.gt_faces_s, r.gt_faces_m, r.gt_faces_l), (1, 1, 1));
}

#[test]
fn eval_embed_distances_and_histogram() {
    let f = Fixture::new(3, "crop", "");
    assert_eq!(f.anonymize(&[]), 0);
    let sidecar = f.sidecar.to_str().unwrap();
    let input = f.input.to_str().unwrap();

    let same = f.path("same/d.csv");
    assert_eq!(
        run(&[
            "eval-embed",
            input,
            input,
            sidecar,
            "--out",
            same.to_str().unwrap()
        ]),
        0
    );
    let rows = anonypipe_cli::commands::read_column(&same, "l2_distance").unwrap();
    assert_eq!(rows.len(), f.faces.face_count());
    assert!(rows.iter().all(|&d| d == 0.0));

    let anon = f.path("anon/d.csv");
    let svg = f.path("anon/d.svg");
    assert_eq!(
        run(&[
            "eval-embed",
            input,
            f.output.to_str().unwrap(),
            sidecar,
            "--out",
            anon.to_str().unwrap(),
            "--svg",
            svg.to_str().unwrap()
        ]),
        0
    );
    let rows = anonypipe_cli::commands::read_column(&anon, "l2_distance").unwrap();
    assert_eq!(rows.len(), f.faces.face_count());
    assert!(rows.iter().all(|&d| d > 0.0 && d <= 2.0));
    let hist = fs::read_to_string(f.path("anon/d_hist.csv")).unwrap();
    assert_eq!(hist.lines().count(), 1 + 50);
    assert!(fs::read_to_string(svg).unwrap().starts_with("<svg"));

    fs::remove_file(f.output.join("img_00.png")).unwrap();
    assert_eq!(
        run(&[
            "eval-embed",
            input,
            f.output.to_str().unwrap(),
            sidecar,
            "--out",
            anon.to_str().unwrap()
        ]),
        1
    );
}

fn write_labels16(path: &std::path::Path, w: u32, h: u32, data: &[u32]) {
    let px: Vec<u16> = data.iter().map(|&v| v as u16).collect();
    fs::create_dir_all(path.parent().unwrap()).unwrap();
    image::ImageBuffer::<image::Luma<u16>, _>::from_raw(w, h, px)
        .unwrap()
        .save(path)
        .unwrap();
}

fn write_labels8(path: &std::path::Path, w: u32, h: u32, data: &[u32]) {
    let px: Vec<u8> = data.iter().map(|&v| v as u8).collect();
    fs::create_dir_all(path.parent().unwrap()).unwrap();
    image::GrayImage::from_raw(w, h, px)
        .unwrap()
        .save(path)
        .unwrap();
}

#[test]
fn eval_seg_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let (gt_dir, pred_dir, same_dir) = (
        dir.path().join("gt"),
        dir.path().join("pred"),
        dir.path().join("same"),
    );
    #[rustfmt::skip]
    let gt = [
        24001, 24001, 0,     7,
        24001, 24001, 24002, 7,
        0,     26,    24002, 7,
        0,     26,    26,    7,
    ];
    #[rustfmt::skip]
    let pred = [
        24, 24, 24, 7,
        24, 7,  7,  7,
        0,  26, 24, 7,
        0,  26, 0,  7,
    ];
    write_labels16(&gt_dir.join("city/a.png"), 4, 4, &gt);
    write_labels8(&pred_dir.join("city/a.png"), 4, 4, &pred);
    let classes: Vec<u32> = gt
        .iter()
        .map(|&v| if v >= 1000 { v / 1000 } else { v })
        .collect();
    write_labels8(&same_dir.join("city/a.png"), 4, 4, &classes);

    let out = dir.path().join("r.json");
    let args = |pred: &std::path::Path, extra: &[&str]| {
        let mut a = vec![
            "eval-seg".to_string(),
            gt_dir.to_str().unwrap().to_string(),
            pred.to_str().unwrap().to_string(),
            "--classes".into(),
            "24,26,7".into(),
            "--out".into(),
            out.to_str().unwrap().to_string(),
        ];
        a.extend(extra.iter().map(|s| s.to_string()));
        a
    };
    let go = |a: Vec<String>| anonypipe_cli::run(std::iter::once("anonypipe".to_string()).chain(a));
    let load =
        || -> SegEvalReport { serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap() };

    assert_eq!(go(args(&same_dir, &[])), 0);
    let r = load();
    for c in &r.classes {
        assert_eq!(c.iou, Some(1.0), "class {}", c.class_id);
    }
    assert_eq!(r.class(24).unwrap().iiou, Some(1.0));

    assert_eq!(go(args(&pred_dir, &[])), 0);
    let r = load();
    let c24 = r.class(24).unwrap();
    assert_eq!(c24.iou, oracles::iou_oracle(&classes, &pred, 24));
    let avg = c24.avg_instance_size.unwrap();
    assert_eq!(avg, 3.0);
    let want = oracles::iiou_oracle(&gt, &pred, 24, avg).unwrap();
    assert!((c24.iiou.unwrap() - want).abs() < 1e-12);
    assert_eq!(r.class(26).unwrap().iiou, None);
    assert_eq!(
        r.class(7).unwrap().iou,
        oracles::iou_oracle(&classes, &pred, 7)
    );

    let base = dir.path().join("base.json");
    fs::copy(&out, &base).unwrap();
    assert_eq!(
        go(args(&pred_dir, &["--baseline", base.to_str().unwrap()])),
        0
    );
    assert!(load().classes.iter().all(|c| c.delta_iou_rel == Some(0.0)));

    write_labels8(&pred_dir.join("city/a.png"), 4, 3, &pred[..12]);
    assert_eq!(go(args(&pred_dir, &[])), 1);
}

#[test]
fn histogram_command() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("v.csv");
    fs::write(
        &input,
        "image_path,face_index,l2_distance\na,0,0.1\na,1,1.9\nb,0,2.0\nb,1,2.5\n",
    )
    .unwrap();
    let out = dir.path().join("h.csv");
    let code = run(&[
        "histogram",
        input.to_str().unwrap(),
        "--bins",
        "4",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert_eq!(
        fs::read_to_string(&out).unwrap(),
        "bin_left,bin_right,count\n0,0.5,1\n0.5,1,0\n1,1.5,0\n1.5,2,2\n"
    );
    assert_eq!(
        run(&["histogram", input.to_str().unwrap(), "--column", "nope"]),
        2
    );
    assert_eq!(
        run(&["histogram", input.to_str().unwrap(), "--bins", "0"]),
        2
    );
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_anonypipe");
    let status = |args: &[&str]| {
        Command::new(bin)
            .args(args)
            .output()
            .unwrap()
            .status
            .code()
            .unwrap()
    };
    assert_eq!(status(&["--help"]), 0);
    assert_eq!(status(&["--version"]), 0);
    assert_eq!(status(&["frobnicate"]), 2);
    assert_eq!(
        status(&["eval-det", "/nonexistent/a.json", "/nonexistent/b.json"]),
        1
    );
}

#[cfg(unix)]
#[test]
fn plugin_backends_from_env() {
    use std::os::unix::fs::PermissionsExt;
    let mut f = Fixture::new(2, "ldfa", "");
    let plugins = f.path("plugins");
    fs::create_dir_all(&plugins).unwrap();
    let script = r#"#!/bin/sh
cmd="$1"; shift
case "$cmd" in
capabilities) printf '{"kind":"%s","name":"copy","version":"2.1","safe_for_concurrent_calls":false,"deterministic":true}' "$1" ;;
inpaint)
  while [ $# -gt 0 ]; do
    case "$1" in --image) img="$2" ;; --out) out="$2" ;; esac
    shift 2
  done
  cp "$img" "$out" ;;
*) exit 64 ;;
esac
"#;
    let exe = plugins.join("copy");
    fs::write(&exe, script).unwrap();
    fs::set_permissions(&exe, fs::Permissions::from_mode(0o755)).unwrap();
    f.write_config(
        "ldfa",
        "[ldfa]\nmodel_resolution = 64\n[inpainter]\nbackend = \"copy\"",
    );

    let out = Command::new(env!("CARGO_BIN_EXE_anonypipe"))
        .args([
            "anonymize",
            "--config",
            f.config.to_str().unwrap(),
            "--jobs",
            "3",
        ])
        .env("ANONYPIPE_BACKEND_DIR", &plugins)
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let m = run_manifest(&f);
    let caps = m.backends.inpainter.unwrap();
    assert_eq!((caps.name.as_str(), caps.version.as_str()), ("copy", "2.1"));
    for e in &f.faces.entries {
        assert_eq!(f.output_image(&e.image_path), f.input_image(&e.image_path));
    }

    let missing = Command::new(env!("CARGO_BIN_EXE_anonypipe"))
        .args(["anonymize", "--config", f.config.to_str().unwrap()])
        .env("ANONYPIPE_BACKEND_DIR", f.path("nowhere"))
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));
}
