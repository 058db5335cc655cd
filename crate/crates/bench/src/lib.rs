//! Synthetic workloads for the benchmarks.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use shs_core::{ConfidenceGrid, DetectedObject, GeoMeta, GroundTruthObject, PixelSet};

/// Noisy background with `n_panels` bright rectangles, some split by a
/// low-confidence seam.
pub fn confidence_map(width: usize, height: usize, n_panels: usize, seed: u64) -> ConfidenceGrid {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut values: Vec<f32> = (0..width * height)
        .map(|_| rng.gen_range(0.0..0.3))
        .collect();
    for _ in 0..n_panels {
        let (bw, bh) = (rng.gen_range(6..20), rng.gen_range(6..20));
        let x0 = rng.gen_range(0..width - bw);
        let y0 = rng.gen_range(0..height - bh);
        let seam = rng.gen_bool(0.3).then(|| x0 + bw / 2);
        let c = rng.gen_range(0.6..1.0);
        for y in y0..y0 + bh {
            for x in x0..x0 + bw {
                values[y * width + x] = if Some(x) == seam { 0.2 } else { c };
            }
        }
    }
    ConfidenceGrid::new(GeoMeta::new(width, height, 0.03).unwrap(), values).unwrap()
}

fn rect(width: usize, x0: usize, y0: usize, w: usize, h: usize) -> PixelSet {
    PixelSet::from_xy(
        width,
        (y0..y0 + h).flat_map(|y| (x0..x0 + w).map(move |x| (x, y))),
    )
}

/// `n` truths on a lattice, each with a jittered prediction, plus `n / 4`
/// false positives.
pub fn matching_scene(n: usize, seed: u64) -> (Vec<DetectedObject>, Vec<GroundTruthObject>) {
    let mut rng = StdRng::seed_from_u64(seed);
    let cols = (n as f64).sqrt().ceil() as usize + 1;
    let width = cols * 24;
    let mut truths = Vec::with_capacity(n);
    let mut preds = Vec::with_capacity(n + n / 4);
    for k in 0..n {
        let (x0, y0) = ((k % cols) * 24 + 4, (k / cols) * 24 + 4);
        truths.push(GroundTruthObject::new(
            k as i64 + 1,
            rect(width, x0, y0, 12, 10),
            0.03,
        ));
        let (dx, dy) = (rng.gen_range(0..4), rng.gen_range(0..4));
        preds.push(DetectedObject {
            id: k as u32 + 1,
            pixels: rect(width, x0 + dx, y0 + dy, 12, 10),
            confidence: rng.gen_range(0.3..1.0),
        });
    }
    for k in 0..n / 4 {
        let cell = rng.gen_range(0..n);
        let (x0, y0) = ((cell % cols) * 24 + 17, (cell / cols) * 24 + 16);
        preds.push(DetectedObject {
            id: (n + k) as u32 + 1,
            pixels: rect(width, x0, y0, 5, 5),
            confidence: rng.gen_range(0.3..1.0),
        });
    }
    (preds, truths)
}
