//! Deterministic fixtures shared by the benchmarks.

use anonypipe_core::{BoundingBox, FaceDetection, ImageBuffer};

/// Street-scene stand-in: smooth gradients with a little texture.
pub fn scene(width: u32, height: u32) -> ImageBuffer {
    ImageBuffer::from_fn(width, height, |x, y| {
        let t = ((x * 7 + y * 13) % 17) as u8;
        [
            (x % 256) as u8 ^ t,
            (y % 256) as u8,
            ((x + y) / 4 % 256) as u8,
        ]
    })
}

/// `n` non-overlapping faces laid out on a grid, confidences descending.
pub fn faces(n: usize, side: i64, img_w: u32) -> Vec<FaceDetection> {
    let per_row = (img_w as i64 / (side * 2)).max(1);
    (0..n as i64)
        .map(|i| {
            let x = (i % per_row) * side * 2 + side / 2;
            let y = (i / per_row) * side * 2 + side / 2;
            let b = BoundingBox::new(x, y, x + side, y + side).expect("grid box");
            FaceDetection::new(b, 1.0 - i as f64 / (n as f64 + 1.0)).expect("confidence")
        })
        .collect()
}

/// Pseudo-random predictions around `gt`: jittered copies plus clutter.
pub fn jittered(gt: &[FaceDetection], seed: u64) -> Vec<FaceDetection> {
    let mut state = seed
        .wrapping_mul(6364136223846793005)
        .wrapping_add(1442695040888963407);
    let mut next = move |m: i64| {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((state >> 33) % m as u64) as i64
    };
    let mut out = Vec::with_capacity(gt.len() * 2);
    for g in gt {
        let b = g.bbox;
        let (dx, dy) = (next(7) - 3, next(7) - 3);
        let jb = BoundingBox::new(
            (b.x0 + dx).max(0),
            (b.y0 + dy).max(0),
            b.x1 + dx + 3,
            b.y1 + dy + 3,
        )
        .expect("jittered box");
        out.push(FaceDetection::new(jb, next(1000) as f64 / 1000.0).expect("confidence"));
        let cx = next(400);
        let cy = next(400);
        let clutter =
            BoundingBox::new(cx, cy, cx + 5 + next(40), cy + 5 + next(40)).expect("clutter box");
        out.push(FaceDetection::new(clutter, next(1000) as f64 / 1000.0).expect("confidence"));
    }
    out
}
