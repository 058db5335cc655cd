//! Simulation of coarser sensors from high-resolution grids.
//!
//! A grid at pixel pitch `s` is degraded to an effective resolution `t > s`
//! by area-averaging onto a `ceil(W/f) x ceil(H/f)` grid (`f = t/s`, with
//! fractional pixel coverage for non-integer factors) and then bilinearly
//! upsampling back to `W x H`. The pixel pitch is unchanged; only the
//! information content drops.

use crate::error::{Error, Result};
use crate::grid::{ConfidenceGrid, RgbRaster};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResampleSpec {
    pub target_gsd_m: f64,
}

impl ResampleSpec {
    pub fn new(target_gsd_m: f64) -> Result<Self> {
        if !(target_gsd_m.is_finite() && target_gsd_m > 0.0) {
            return Err(Error::argument(format!(
                "target GSD must be > 0, got {target_gsd_m}"
            )));
        }
        Ok(Self { target_gsd_m })
    }

    /// Degradation factor `target / source`; fails if the target is finer.
    pub fn factor(&self, source_gsd_m: f64) -> Result<f64> {
        if self.target_gsd_m < source_gsd_m {
            return Err(Error::argument(format!(
                "target GSD {} m is finer than the source GSD {} m",
                self.target_gsd_m, source_gsd_m
            )));
        }
        Ok(self.target_gsd_m / source_gsd_m)
    }
}

/// Degrades a confidence grid to `spec.target_gsd_m`. The returned metadata
/// keeps `gsd_m` and sets `effective_gsd_m`.
pub fn simulate_gsd(grid: &ConfidenceGrid, spec: &ResampleSpec) -> Result<ConfidenceGrid> {
    let meta = grid.meta();
    let factor = spec.factor(meta.gsd_m)?;
    let mut out_meta = meta.clone();
    out_meta.effective_gsd_m = Some(spec.target_gsd_m);
    if factor == 1.0 {
        return grid.clone().with_meta(out_meta);
    }
    let plane: Vec<f64> = grid.values().iter().map(|&v| f64::from(v)).collect();
    let degraded = degrade_plane(&plane, meta.width, meta.height, factor);
    let values = degraded
        .into_iter()
        .map(|v| (v as f32).clamp(0.0, 1.0))
        .collect();
    ConfidenceGrid::new(out_meta, values)
}

/// Degrades each channel of an RGB raster whose pitch is `source_gsd_m`.
pub fn simulate_gsd_rgb(
    raster: &RgbRaster,
    source_gsd_m: f64,
    spec: &ResampleSpec,
) -> Result<RgbRaster> {
    let factor = spec.factor(source_gsd_m)?;
    if factor == 1.0 {
        return Ok(raster.clone());
    }
    let (w, h) = (raster.width(), raster.height());
    let mut data = vec![0u8; w * h * 3];
    for c in 0..3 {
        let plane: Vec<f64> = raster
            .data()
            .iter()
            .skip(c)
            .step_by(3)
            .map(|&v| f64::from(v))
            .collect();
        for (i, v) in degrade_plane(&plane, w, h, factor).into_iter().enumerate() {
            data[i * 3 + c] = v.round().clamp(0.0, 255.0) as u8;
        }
    }
    RgbRaster::from_data(w, h, data)
}

/// Object size in pixels at a given GSD.
pub fn effective_extent(object_m: f64, gsd_m: f64) -> f64 {
    object_m / gsd_m
}

/// Coarse cells along one axis: each cell's fine-pixel weights and its
/// center in fine pixel coordinates.
struct AxisCells {
    weights: Vec<Vec<(usize, f64)>>,
    centers: Vec<f64>,
}

fn axis_cells(len: usize, factor: f64) -> AxisCells {
    let n = ((len as f64 / factor) - 1e-9).ceil().max(1.0) as usize;
    let mut weights = Vec::with_capacity(n);
    let mut centers = Vec::with_capacity(n);
    for j in 0..n {
        let start = j as f64 * factor;
        let end = ((j + 1) as f64 * factor).min(len as f64);
        let first = start.floor() as usize;
        let last = (end.ceil() as usize).min(len);
        let cell = (first..last)
            .filter_map(|k| {
                let overlap = (end.min(k as f64 + 1.0) - start.max(k as f64)).max(0.0);
                (overlap > 0.0).then_some((k, overlap))
            })
            .collect();
        weights.push(cell);
        centers.push((start + end) / 2.0);
    }
    AxisCells { weights, centers }
}

/// For each fine pixel, the two coarse cells bracketing its center and the
/// weight of the second one (clamped at the ends).
fn axis_interp(len: usize, centers: &[f64]) -> Vec<(usize, usize, f64)> {
    let last = centers.len() - 1;
    let mut j = 0;
    (0..len)
        .map(|k| {
            let u = k as f64 + 0.5;
            if u <= centers[0] {
                return (0, 0, 0.0);
            }
            if u >= centers[last] {
                return (last, last, 0.0);
            }
            while centers[j + 1] <= u {
                j += 1;
            }
            let t = (u - centers[j]) / (centers[j + 1] - centers[j]);
            (j, j + 1, t)
        })
        .collect()
}

fn degrade_plane(plane: &[f64], w: usize, h: usize, factor: f64) -> Vec<f64> {
    let xs = axis_cells(w, factor);
    let ys = axis_cells(h, factor);
    let (cw, ch) = (xs.centers.len(), ys.centers.len());

    // area average along x, then along y
    let mut rows = vec![0.0; cw * h];
    for y in 0..h {
        for (cx, cell) in xs.weights.iter().enumerate() {
            let (s, wsum) = cell.iter().fold((0.0, 0.0), |(s, ws), &(x, wt)| {
                (s + wt * plane[y * w + x], ws + wt)
            });
            rows[y * cw + cx] = s / wsum;
        }
    }
    let mut coarse = vec![0.0; cw * ch];
    for (cy, cell) in ys.weights.iter().enumerate() {
        for cx in 0..cw {
            let (s, wsum) = cell.iter().fold((0.0, 0.0), |(s, ws), &(y, wt)| {
                (s + wt * rows[y * cw + cx], ws + wt)
            });
            coarse[cy * cw + cx] = s / wsum;
        }
    }

    let ix = axis_interp(w, &xs.centers);
    let iy = axis_interp(h, &ys.centers);
    let mut out = Vec::with_capacity(w * h);
    for &(y0, y1, ty) in &iy {
        for &(x0, x1, tx) in &ix {
            let top = coarse[y0 * cw + x0] * (1.0 - tx) + coarse[y0 * cw + x1] * tx;
            let bottom = coarse[y1 * cw + x0] * (1.0 - tx) + coarse[y1 * cw + x1] * tx;
            out.push(top * (1.0 - ty) + bottom * ty);
        }
    }
    out
}
