//! Fixture writers and a runner for the `shs` binary.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Output;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use shs_core::grid::save_confidence_grid;
use shs_core::{AnnotationSet, ConfidenceGrid, GeoMeta, PolygonAnnotation};

pub const GSD: f64 = 0.03;

/// Axis-aligned block `(x, y, w, h)` in pixels.
pub type Rect = (usize, usize, usize, usize);

pub fn shs(args: &[&str]) -> Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_shs"))
        .args(args)
        .output()
        .expect("spawn shs")
}

pub fn shs_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = std::process::Command::new(env!("CARGO_BIN_EXE_shs"));
    cmd.args(args).env_remove("SHS_ASSUMPTIONS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("spawn shs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 path")
}

/// Background zero, each block filled with its confidence.
pub fn write_grid(path: &Path, w: usize, h: usize, blocks: &[(Rect, f32)]) {
    let mut values = vec![0.0f32; w * h];
    for &((x0, y0, bw, bh), c) in blocks {
        for y in y0..y0 + bh {
            for x in x0..x0 + bw {
                values[y * w + x] = c;
            }
        }
    }
    let grid = ConfidenceGrid::new(GeoMeta::new(w, h, GSD).unwrap(), values).unwrap();
    save_confidence_grid(&grid, path).unwrap();
}

pub fn write_truth(
    path: &Path,
    image: &str,
    w: usize,
    h: usize,
    tag: Option<&str>,
    rects: &[Rect],
) {
    let mut meta = GeoMeta::new(w, h, GSD).unwrap();
    if let Some(t) = tag {
        meta = meta.with_tag(t);
    }
    let polygons = rects
        .iter()
        .enumerate()
        .map(|(k, &(x, y, bw, bh))| {
            PolygonAnnotation::rectangle(
                k as i64 + 1,
                x as f64,
                y as f64,
                (x + bw) as f64,
                (y + bh) as f64,
            )
        })
        .collect();
    AnnotationSet::new(image, meta, polygons)
        .unwrap()
        .save(path)
        .unwrap();
}

/// `preds/` and `truth/` directories under `root`.
pub fn dirs(root: &Path) -> (PathBuf, PathBuf) {
    let (pd, td) = (root.join("preds"), root.join("truth"));
    std::fs::create_dir_all(&pd).unwrap();
    std::fs::create_dir_all(&td).unwrap();
    (pd, td)
}

/// Truths at (2,2) and (40,40); predictions at those two plus a false
/// positive at (20,20), with confidences 0.9, 0.7 and 0.8.
pub fn three_prediction_scene(root: &Path) -> (PathBuf, PathBuf) {
    let (pd, td) = dirs(root);
    write_truth(
        &td.join("scene.json"),
        "scene",
        60,
        60,
        None,
        &[(2, 2, 6, 6), (40, 40, 6, 6)],
    );
    write_grid(
        &pd.join("scene.fgrid"),
        60,
        60,
        &[
            ((2, 2, 6, 6), 0.9),
            ((20, 20, 6, 6), 0.8),
            ((40, 40, 6, 6), 0.7),
        ],
    );
    (pd, td)
}

/// Images whose predictions mix exact hits, shifted hits, misses and false
/// positives with noisy confidences.
pub fn synthetic_survey(root: &Path, n_images: usize, seed: u64) -> (PathBuf, PathBuf) {
    let (pd, td) = dirs(root);
    let mut rng = StdRng::seed_from_u64(seed);
    let (w, h) = (96, 96);
    for i in 0..n_images {
        let stem = format!("img_{i:02}");
        let mut truths = Vec::new();
        let mut blocks = Vec::new();
        // 3x3 lattice of 32 px cells; each cell holds at most one object
        for cell in 0..9 {
            let (cx, cy) = ((cell % 3) * 32 + 4, (cell / 3) * 32 + 4);
            let (bw, bh) = (rng.gen_range(6..14), rng.gen_range(6..14));
            let conf = rng.gen_range(0.55f32..1.0);
            match rng.gen_range(0..5) {
                0 => truths.push((cx, cy, bw, bh)),
                1 => blocks.push(((cx, cy, bw, bh), conf)),
                2 => {
                    truths.push((cx, cy, bw, bh));
                    let (dx, dy) = (rng.gen_range(0..4), rng.gen_range(0..4));
                    blocks.push(((cx + dx, cy + dy, bw, bh), conf));
                }
                _ => {
                    truths.push((cx, cy, bw, bh));
                    blocks.push(((cx, cy, bw, bh), conf));
                }
            }
        }
        let tag = if i % 2 == 0 { "normal" } else { "sport" };
        write_truth(
            &td.join(format!("{stem}.json")),
            &stem,
            w,
            h,
            Some(tag),
            &truths,
        );
        write_grid(&pd.join(format!("{stem}.fgrid")), w, h, &blocks);
    }
    (pd, td)
}
