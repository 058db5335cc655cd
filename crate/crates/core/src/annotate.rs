//! Polygon annotations and their conversion into ground-truth pixel maps.
//!
//! Annotation coordinates are in pixels of the annotated image with the
//! origin at its top-left corner. A pixel belongs to a polygon when its center
//! `(x + 0.5, y + 0.5)` is inside under the even-odd rule. Centers lying
//! exactly on an edge follow the top-left convention: they count as inside
//! on left and top edges, and outside on right and bottom edges.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BinaryMask, GeoMeta};
use crate::pixels::PixelSet;

/// The only object class handled by this crate.
pub const SOLAR_PANEL_CLASS: &str = "solar_panel";

/// Vertices may lie up to this many pixels outside the image frame.
const BOUNDS_TOLERANCE_PX: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolygonAnnotation {
    pub id: i64,
    #[serde(rename = "class")]
    pub class_name: String,
    pub vertices: Vec<[f64; 2]>,
}

impl PolygonAnnotation {
    pub fn new(id: i64, vertices: Vec<[f64; 2]>) -> Self {
        Self {
            id,
            class_name: SOLAR_PANEL_CLASS.to_string(),
            vertices,
        }
    }

    /// Axis-aligned rectangle with corners `(x0, y0)` and `(x1, y1)`.
    pub fn rectangle(id: i64, x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self::new(id, vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
    }

    /// Signed shoelace area in square pixels.
    pub fn signed_area(&self) -> f64 {
        let v = &self.vertices;
        let n = v.len();
        (0..n)
            .map(|i| {
                let (a, b) = (v[i], v[(i + 1) % n]);
                a[0] * b[1] - b[0] * a[1]
            })
            .sum::<f64>()
            / 2.0
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    /// Checks vertex count, finiteness, frame bounds, and simplicity.
    pub fn validate(&self, meta: &GeoMeta) -> Result<()> {
        if self.class_name != SOLAR_PANEL_CLASS {
            return Err(Error::format(format!(
                "polygon {}: unsupported class {:?}",
                self.id, self.class_name
            )));
        }
        if self.vertices.len() < 3 {
            return Err(Error::geometry(format!(
                "polygon {} has {} vertices, need at least 3",
                self.id,
                self.vertices.len()
            )));
        }
        let (w, h) = (meta.width as f64, meta.height as f64);
        for &[x, y] in &self.vertices {
            if !(x.is_finite() && y.is_finite()) {
                return Err(Error::geometry(format!(
                    "polygon {} has a non-finite vertex",
                    self.id
                )));
            }
            let t = BOUNDS_TOLERANCE_PX;
            if x < -t || y < -t || x > w + t || y > h + t {
                return Err(Error::geometry(format!(
                    "polygon {}: vertex ({x}, {y}) lies outside the {}x{} frame",
                    self.id, meta.width, meta.height
                )));
            }
        }
        if !is_simple(&self.vertices) {
            return Err(Error::geometry(format!(
                "polygon {} is self-intersecting or degenerate",
                self.id
            )));
        }
        Ok(())
    }
}

/// One image's worth of annotations.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationSet {
    pub image_id: String,
    pub meta: GeoMeta,
    pub polygons: Vec<PolygonAnnotation>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AnnotationFile {
    image: String,
    width: usize,
    height: usize,
    gsd_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    altitude_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tag: Option<String>,
    polygons: Vec<PolygonAnnotation>,
}

impl AnnotationSet {
    pub fn new(
        image_id: impl Into<String>,
        meta: GeoMeta,
        polygons: Vec<PolygonAnnotation>,
    ) -> Result<Self> {
        let set = Self {
            image_id: image_id.into(),
            meta,
            polygons,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        let mut ids = HashSet::new();
        for p in &self.polygons {
            if !ids.insert(p.id) {
                return Err(Error::format(format!(
                    "image {}: duplicate polygon id {}",
                    self.image_id, p.id
                )));
            }
            p.validate(&self.meta)?;
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: AnnotationFile = serde_json::from_str(text)
            .map_err(|e| Error::format(format!("annotation JSON: {e}")))?;
        let mut meta = GeoMeta::new(file.width, file.height, file.gsd_m)
            .map_err(|e| Error::format(format!("annotation header: {e}")))?;
        meta.altitude_m = file.altitude_m;
        meta.tag = file.tag;
        Self::new(file.image, meta, file.polygons)
    }

    pub fn to_json(&self) -> String {
        let file = AnnotationFile {
            image: self.image_id.clone(),
            width: self.meta.width,
            height: self.meta.height,
            gsd_m: self.meta.gsd_m,
            altitude_m: self.meta.altitude_m,
            tag: self.meta.tag.clone(),
            polygons: self.polygons.clone(),
        };
        serde_json::to_string_pretty(&file).expect("annotation set serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }
}

/// Reads and validates one annotation JSON file.
pub fn parse_annotations(path: impl AsRef<Path>) -> Result<AnnotationSet> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    AnnotationSet::from_json(&text)
}

/// Rasterizes one polygon by pixel-center inclusion.
pub fn rasterize(polygon: &PolygonAnnotation, meta: &GeoMeta) -> Result<BinaryMask> {
    let pixels = rasterize_pixels(polygon, meta)?;
    let mut mask = BinaryMask::empty(meta.clone());
    for i in pixels.iter() {
        mask.bits_mut()[i] = true;
    }
    Ok(mask)
}

/// Same as [`rasterize`] but returns the covered pixel set directly.
pub fn rasterize_pixels(polygon: &PolygonAnnotation, meta: &GeoMeta) -> Result<PixelSet> {
    polygon.validate(meta)?;
    if polygon.area() < 1e-12 {
        return Err(Error::geometry(format!(
            "polygon {} has zero area",
            polygon.id
        )));
    }
    let v = &polygon.vertices;
    let n = v.len();
    let mut out = Vec::new();
    let mut crossings = Vec::with_capacity(n);
    for y in 0..meta.height {
        let yc = y as f64 + 0.5;
        crossings.clear();
        for i in 0..n {
            let ([x0, y0], [x1, y1]) = (v[i], v[(i + 1) % n]);
            if y0 == y1 {
                continue;
            }
            // half-open in y: an edge owns its top end, not its bottom end
            let (lo, hi) = if y0 < y1 { (y0, y1) } else { (y1, y0) };
            if lo <= yc && yc < hi {
                crossings.push(x0 + (yc - y0) * (x1 - x0) / (y1 - y0));
            }
        }
        crossings.sort_by(f64::total_cmp);
        for span in crossings.chunks_exact(2) {
            // centers with xa <= x + 0.5 < xb
            let first = (span[0] - 0.5).ceil().max(0.0);
            let end = (span[1] - 0.5).ceil().min(meta.width as f64);
            let (first, end) = (first as usize, end.max(0.0) as usize);
            out.extend((first..end.max(first)).map(|x| (y * meta.width + x) as u32));
        }
    }
    Ok(PixelSet::from_sorted_unchecked(out))
}

/// Union of every polygon's rasterization.
pub fn rasterize_set(set: &AnnotationSet) -> Result<BinaryMask> {
    let mut mask = BinaryMask::empty(set.meta.clone());
    for p in &set.polygons {
        for i in rasterize_pixels(p, &set.meta)?.iter() {
            mask.bits_mut()[i] = true;
        }
    }
    Ok(mask)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthObject {
    pub id: i64,
    pub pixels: PixelSet,
    pub area_m2: f64,
}

impl GroundTruthObject {
    pub fn new(id: i64, pixels: PixelSet, gsd_m: f64) -> Self {
        let area_m2 = pixels.len() as f64 * gsd_m * gsd_m;
        Self {
            id,
            pixels,
            area_m2,
        }
    }

    pub fn area_px(&self) -> usize {
        self.pixels.len()
    }
}

/// Truth objects for one image plus the ids of polygons that covered no
/// pixel center and were dropped.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TruthObjects {
    pub objects: Vec<GroundTruthObject>,
    pub dropped: Vec<i64>,
}

impl TruthObjects {
    pub fn warnings(&self) -> Vec<String> {
        self.dropped
            .iter()
            .map(|id| format!("polygon {id} covers no pixel center and was dropped"))
            .collect()
    }
}

/// One truth object per polygon. Overlapping polygons stay separate objects.
pub fn truth_objects(set: &AnnotationSet) -> Result<TruthObjects> {
    let mut out = TruthObjects::default();
    for p in &set.polygons {
        let pixels = rasterize_pixels(p, &set.meta)?;
        if pixels.is_empty() {
            out.dropped.push(p.id);
        } else {
            out.objects
                .push(GroundTruthObject::new(p.id, pixels, set.meta.gsd_m));
        }
    }
    Ok(out)
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn on_segment(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
    p[0] >= a[0].min(b[0])
        && p[0] <= a[0].max(b[0])
        && p[1] >= a[1].min(b[1])
        && p[1] <= a[1].max(b[1])
}

/// Closed-segment intersection test, touching included.
fn segments_intersect(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

/// True when the closed polyline has no zero-length edges, no crossings
/// between non-adjacent edges, and no folding back of adjacent edges.
fn is_simple(v: &[[f64; 2]]) -> bool {
    let n = v.len();
    if (0..n).any(|i| v[i] == v[(i + 1) % n]) {
        return false;
    }
    for i in 0..n {
        let (a0, a1) = (v[i], v[(i + 1) % n]);
        for j in i + 1..n {
            let (b0, b1) = (v[j], v[(j + 1) % n]);
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                // shared vertex s; the edges overlap iff the far ends are
                // collinear with s and on the same side of it
                let (s, p, q) = if j == i + 1 {
                    (a1, a0, b1)
                } else {
                    (a0, a1, b0)
                };
                let dot = (p[0] - s[0]) * (q[0] - s[0]) + (p[1] - s[1]) * (q[1] - s[1]);
                if orient(s, p, q) == 0.0 && dot > 0.0 {
                    return false;
                }
                if n == 3 {
                    continue;
                }
            } else if segments_intersect(a0, a1, b0, b1) {
                return false;
            }
        }
    }
    true
}
