//! Confidence map post-processing: turns per-pixel confidences into
//! candidate objects.
//!
//! The pipeline runs five steps in a fixed order:
//!
//! 1. threshold the confidence map at `tau_seed`;
//! 2. group connected foreground pixels;
//! 3. drop groups smaller than the minimum area;
//! 4. dilate the surviving foreground;
//! 5. regroup the surviving pixels by the connected components of the
//!    dilated mask, so that fragments bridged by dilation become one object
//!    without the dilation adding any area.
//!
//! Each resulting object is scored by the mean confidence of its pixels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{threshold, BinaryMask, ConfidenceGrid, GeoMeta, LabelGrid};
use crate::pixels::PixelSet;
use crate::rle;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Connectivity {
    /// Edge neighbors only.
    Four,
    /// Edge and corner neighbors.
    #[default]
    Eight,
}

impl TryFrom<u8> for Connectivity {
    type Error = Error;

    fn try_from(n: u8) -> Result<Self> {
        match n {
            4 => Ok(Connectivity::Four),
            8 => Ok(Connectivity::Eight),
            _ => Err(Error::argument(format!(
                "connectivity must be 4 or 8, got {n}"
            ))),
        }
    }
}

impl Connectivity {
    pub fn as_u8(self) -> u8 {
        match self {
            Connectivity::Four => 4,
            Connectivity::Eight => 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PostprocessParams {
    pub tau_seed: f64,
    pub connectivity: Connectivity,
    pub min_area_m2: f64,
    pub dilation_radius_px: usize,
}

impl Default for PostprocessParams {
    fn default() -> Self {
        Self {
            tau_seed: 0.5,
            connectivity: Connectivity::Eight,
            min_area_m2: 0.02,
            dilation_radius_px: 2,
        }
    }
}

impl PostprocessParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.tau_seed) {
            return Err(Error::argument(format!(
                "tau_seed must be in [0, 1], got {}",
                self.tau_seed
            )));
        }
        if !(self.min_area_m2.is_finite() && self.min_area_m2 >= 0.0) {
            return Err(Error::argument(format!(
                "min_area_m2 must be >= 0, got {}",
                self.min_area_m2
            )));
        }
        Ok(())
    }

    /// Minimum component size in pixels at the given GSD:
    /// `ceil(min_area_m2 / gsd_m^2)`.
    pub fn min_area_px(&self, gsd_m: f64) -> usize {
        let px = self.min_area_m2 / (gsd_m * gsd_m);
        // absorb representation error such as 0.02 / 0.01^2 = 200.00000000000003
        let nearest = px.round();
        if (px - nearest).abs() <= 1e-9 * nearest.max(1.0) {
            nearest as usize
        } else {
            px.ceil() as usize
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectedObject {
    pub id: u32,
    pub pixels: PixelSet,
    /// Mean member-pixel confidence.
    pub confidence: f64,
}

impl DetectedObject {
    pub fn area_px(&self) -> usize {
        self.pixels.len()
    }
}

struct DisjointSet {
    parent: Vec<u32>,
}

impl DisjointSet {
    fn new() -> Self {
        Self { parent: vec![0] }
    }

    fn make(&mut self) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        id
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) -> u32 {
        let (ra, rb) = (self.find(a), self.find(b));
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi as usize] = lo;
        lo
    }
}

/// Labels maximal connected foreground regions `1..=K`, numbered in
/// raster-scan order of each region's first pixel.
pub fn connected_components(mask: &BinaryMask, connectivity: Connectivity) -> LabelGrid {
    let (w, h) = (mask.width(), mask.height());
    let bits = mask.bits();
    let mut provisional = vec![0u32; bits.len()];
    let mut sets = DisjointSet::new();

    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if !bits[i] {
                continue;
            }
            let mut label = 0u32;
            let mut join = |n: usize, label: &mut u32| {
                let l = provisional[n];
                if l != 0 {
                    *label = if *label == 0 {
                        l
                    } else {
                        sets.union(*label, l)
                    };
                }
            };
            if x > 0 {
                join(i - 1, &mut label);
            }
            if y > 0 {
                join(i - w, &mut label);
                if connectivity == Connectivity::Eight {
                    if x > 0 {
                        join(i - w - 1, &mut label);
                    }
                    if x + 1 < w {
                        join(i - w + 1, &mut label);
                    }
                }
            }
            provisional[i] = if label == 0 { sets.make() } else { label };
        }
    }

    let mut final_of_root = vec![0u32; sets.parent.len()];
    let mut count = 0u32;
    for l in provisional.iter_mut() {
        if *l == 0 {
            continue;
        }
        let root = sets.find(*l) as usize;
        if final_of_root[root] == 0 {
            count += 1;
            final_of_root[root] = count;
        }
        *l = final_of_root[root];
    }
    LabelGrid::from_parts_unchecked(mask.meta().clone(), provisional, count)
}

/// Sets components smaller than `min_area_px` to background and renumbers
/// the survivors contiguously, keeping their relative order.
pub fn filter_small(labels: &LabelGrid, min_area_px: usize) -> LabelGrid {
    let areas = labels.areas();
    let mut remap = vec![0u32; areas.len()];
    let mut count = 0u32;
    for (l, &a) in areas.iter().enumerate().skip(1) {
        if a >= min_area_px {
            count += 1;
            remap[l] = count;
        }
    }
    let out = labels.labels().iter().map(|&l| remap[l as usize]).collect();
    LabelGrid::from_parts_unchecked(labels.meta().clone(), out, count)
}

/// Dilation by a `(2r+1) x (2r+1)` square; `radius_px = 0` is the identity.
pub fn dilate(mask: &BinaryMask, radius_px: usize) -> BinaryMask {
    if radius_px == 0 {
        return mask.clone();
    }
    let (w, h) = (mask.width(), mask.height());
    let horizontal = sliding_any(mask.bits(), w, h, radius_px, true);
    let bits = sliding_any(&horizontal, w, h, radius_px, false);
    BinaryMask::new(mask.meta().clone(), bits).expect("same dimensions")
}

/// 1-D running "any set within radius" along rows or columns.
fn sliding_any(src: &[bool], w: usize, h: usize, r: usize, along_rows: bool) -> Vec<bool> {
    let (lines, len) = if along_rows { (h, w) } else { (w, h) };
    let at = |line: usize, k: usize| {
        if along_rows {
            line * w + k
        } else {
            k * w + line
        }
    };
    let mut out = vec![false; src.len()];
    for line in 0..lines {
        let mut count = 0usize;
        // window for position k is [k - r, k + r]
        for k in 0..r.min(len) {
            count += usize::from(src[at(line, k)]);
        }
        for k in 0..len {
            if k + r < len {
                count += usize::from(src[at(line, k + r)]);
            }
            if k > r {
                count -= usize::from(src[at(line, k - r - 1)]);
            }
            out[at(line, k)] = count > 0;
        }
    }
    out
}

/// Assigns each pre-dilation foreground pixel the id of the dilated
/// component containing it. The output support equals the input support;
/// labels are renumbered contiguously in raster order.
pub fn regroup(
    pre_labels: &LabelGrid,
    dilated: &BinaryMask,
    connectivity: Connectivity,
) -> Result<LabelGrid> {
    if !pre_labels.meta().same_dims(dilated.meta()) {
        return Err(Error::argument(
            "label grid and dilated mask differ in size",
        ));
    }
    if let Some(i) = pre_labels
        .labels()
        .iter()
        .zip(dilated.bits())
        .position(|(&l, &d)| l != 0 && !d)
    {
        return Err(Error::argument(format!(
            "pre-dilation foreground pixel {i} is background in the dilated mask"
        )));
    }
    let grouped = connected_components(dilated, connectivity);
    let mut remap = vec![0u32; grouped.count() as usize + 1];
    let mut count = 0u32;
    let labels = pre_labels
        .labels()
        .iter()
        .zip(grouped.labels())
        .map(|(&pre, &g)| {
            if pre == 0 {
                return 0;
            }
            if remap[g as usize] == 0 {
                count += 1;
                remap[g as usize] = count;
            }
            remap[g as usize]
        })
        .collect();
    Ok(LabelGrid::from_parts_unchecked(
        pre_labels.meta().clone(),
        labels,
        count,
    ))
}

/// Runs the full pipeline and returns objects ordered by label.
pub fn postprocess(
    grid: &ConfidenceGrid,
    params: &PostprocessParams,
) -> Result<Vec<DetectedObject>> {
    params.validate()?;
    let seeds = threshold(grid, params.tau_seed)?;
    let grouped = connected_components(&seeds, params.connectivity);
    let kept = filter_small(&grouped, params.min_area_px(grid.meta().gsd_m));
    let dilated = dilate(&kept.foreground(), params.dilation_radius_px);
    let regrouped = regroup(&kept, &dilated, params.connectivity)?;
    Ok(objects_from_labels(grid, &regrouped))
}

/// Builds one object per label with its mean confidence.
pub fn objects_from_labels(grid: &ConfidenceGrid, labels: &LabelGrid) -> Vec<DetectedObject> {
    let values = grid.values();
    labels
        .components()
        .into_iter()
        .enumerate()
        .map(|(k, pixels)| {
            let sum: f64 = pixels.iter().map(|i| f64::from(values[i])).sum();
            DetectedObject {
                id: k as u32 + 1,
                confidence: sum / pixels.len() as f64,
                pixels,
            }
        })
        .collect()
}

/// On-disk form of one image's detections. `width`/`height` are optional so
/// that files without them still load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionFile {
    pub image: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<usize>,
    pub objects: Vec<ObjectRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectRecord {
    pub id: u32,
    pub confidence: f64,
    pub area_px: usize,
    pub pixels_rle: Vec<[u64; 2]>,
}

impl DetectionFile {
    /// Confidences are rounded to 6 decimals.
    pub fn new(image: impl Into<String>, meta: &GeoMeta, objects: &[DetectedObject]) -> Self {
        Self {
            image: image.into(),
            width: Some(meta.width),
            height: Some(meta.height),
            objects: objects
                .iter()
                .map(|o| ObjectRecord {
                    id: o.id,
                    confidence: (o.confidence * 1e6).round() / 1e6,
                    area_px: o.area_px(),
                    pixels_rle: rle::encode(&o.pixels),
                })
                .collect(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::format(format!("detection JSON: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("detection file serializes")
    }

    /// Decodes the objects, checking each declared area and, when the file
    /// carries dimensions, that every pixel is inside the frame.
    pub fn objects(&self) -> Result<Vec<DetectedObject>> {
        let limit = self.width.zip(self.height).map(|(w, h)| w * h);
        self.objects
            .iter()
            .map(|r| {
                let pixels = rle::decode(&r.pixels_rle)?;
                if pixels.len() != r.area_px {
                    return Err(Error::format(format!(
                        "object {}: area_px {} but {} pixels encoded",
                        r.id,
                        r.area_px,
                        pixels.len()
                    )));
                }
                if let (Some(n), Some(max)) = (limit, pixels.max_index()) {
                    if max >= n {
                        return Err(Error::format(format!(
                            "object {}: pixel {max} outside frame",
                            r.id
                        )));
                    }
                }
                if !(0.0..=1.0).contains(&r.confidence) {
                    return Err(Error::format(format!(
                        "object {}: confidence {}",
                        r.id, r.confidence
                    )));
                }
                Ok(DetectedObject {
                    id: r.id,
                    pixels,
                    confidence: r.confidence,
                })
            })
            .collect()
    }
}
