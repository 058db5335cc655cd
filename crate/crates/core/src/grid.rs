//! Raster types, on-disk formats, thresholding, and the altitude/GSD table.
//!
//! All grids are row-major with the origin at the top-left pixel, `x`
//! increasing to the right and `y` increasing downward.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

const FGRID_MAGIC: &[u8; 4] = b"FGRD";
const FGRID_HEADER_LEN: usize = 4 + 4 + 4 + 4 + 4;

/// Grid dimensions plus ground sampling distance and acquisition metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct GeoMeta {
    pub width: usize,
    pub height: usize,
    /// Pixel pitch on the ground, meters/pixel.
    pub gsd_m: f64,
    pub altitude_m: Option<f64>,
    /// Free-form grouping tag such as a flight mode.
    pub tag: Option<String>,
    /// Effective resolution after [`crate::resample`] degradation. `gsd_m`
    /// keeps describing the pixel pitch.
    pub effective_gsd_m: Option<f64>,
}

impl GeoMeta {
    pub fn new(width: usize, height: usize, gsd_m: f64) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::argument(format!(
                "grid dimensions must be positive, got {width}x{height}"
            )));
        }
        if !(gsd_m.is_finite() && gsd_m > 0.0) {
            return Err(Error::argument(format!("gsd_m must be > 0, got {gsd_m}")));
        }
        if width
            .checked_mul(height)
            .is_none_or(|n| n > u32::MAX as usize)
        {
            return Err(Error::argument("grid has too many pixels"));
        }
        Ok(Self {
            width,
            height,
            gsd_m,
            altitude_m: None,
            tag: None,
            effective_gsd_m: None,
        })
    }

    pub fn with_altitude(mut self, altitude_m: f64) -> Self {
        self.altitude_m = Some(altitude_m);
        self
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.tag = Some(tag.into());
        self
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn pixel_area_m2(&self) -> f64 {
        self.gsd_m * self.gsd_m
    }

    pub fn same_dims(&self, other: &GeoMeta) -> bool {
        self.width == other.width && self.height == other.height
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }
}

/// Per-pixel detector confidence in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceGrid {
    meta: GeoMeta,
    values: Vec<f32>,
}

impl ConfidenceGrid {
    pub fn new(meta: GeoMeta, values: Vec<f32>) -> Result<Self> {
        if values.len() != meta.len() {
            return Err(Error::format(format!(
                "expected {} values for a {}x{} grid, got {}",
                meta.len(),
                meta.width,
                meta.height,
                values.len()
            )));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::Range(format!(
                "confidence {v} at index {i} is outside [0, 1]"
            )));
        }
        Ok(Self { meta, values })
    }

    pub fn filled(meta: GeoMeta, value: f32) -> Result<Self> {
        let n = meta.len();
        Self::new(meta, vec![value; n])
    }

    pub fn meta(&self) -> &GeoMeta {
        &self.meta
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn width(&self) -> usize {
        self.meta.width
    }

    pub fn height(&self) -> usize {
        self.meta.height
    }

    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.values[self.meta.index(x, y)]
    }

    /// Replaces the metadata; dimensions must match.
    pub fn with_meta(self, meta: GeoMeta) -> Result<Self> {
        if !meta.same_dims(&self.meta) {
            return Err(Error::argument("metadata dimensions do not match grid"));
        }
        Ok(Self { meta, ..self })
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().map(|&v| f64::from(v)).sum::<f64>() / self.values.len() as f64
    }

    pub fn max(&self) -> f32 {
        self.values.iter().copied().fold(0.0, f32::max)
    }

    pub fn into_parts(self) -> (GeoMeta, Vec<f32>) {
        (self.meta, self.values)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMask {
    meta: GeoMeta,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(meta: GeoMeta, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != meta.len() {
            return Err(Error::format(format!(
                "expected {} mask bits, got {}",
                meta.len(),
                bits.len()
            )));
        }
        Ok(Self { meta, bits })
    }

    pub fn empty(meta: GeoMeta) -> Self {
        let n = meta.len();
        Self {
            meta,
            bits: vec![false; n],
        }
    }

    pub fn meta(&self) -> &GeoMeta {
        &self.meta
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub(crate) fn bits_mut(&mut self) -> &mut [bool] {
        &mut self.bits
    }

    pub fn width(&self) -> usize {
        self.meta.width
    }

    pub fn height(&self) -> usize {
        self.meta.height
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[self.meta.index(x, y)]
    }

    pub fn set(&mut self, x: usize, y: usize, on: bool) {
        let i = self.meta.index(x, y);
        self.bits[i] = on;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn union_with(&mut self, other: &BinaryMask) {
        for (a, &b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= b;
        }
    }
}

/// Component labels: `0` is background, components are `1..=count`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelGrid {
    meta: GeoMeta,
    labels: Vec<u32>,
    count: u32,
}

impl LabelGrid {
    /// Validates that the label set is exactly `{0} ∪ {1..K}`.
    pub fn new(meta: GeoMeta, labels: Vec<u32>) -> Result<Self> {
        if labels.len() != meta.len() {
            return Err(Error::format(format!(
                "expected {} labels, got {}",
                meta.len(),
                labels.len()
            )));
        }
        let count = labels.iter().copied().max().unwrap_or(0);
        let mut seen = vec![false; count as usize + 1];
        for &l in &labels {
            seen[l as usize] = true;
        }
        if let Some(gap) = seen.iter().skip(1).position(|s| !s) {
            return Err(Error::argument(format!("label {} is missing", gap + 1)));
        }
        Ok(Self {
            meta,
            labels,
            count,
        })
    }

    pub(crate) fn from_parts_unchecked(meta: GeoMeta, labels: Vec<u32>, count: u32) -> Self {
        Self {
            meta,
            labels,
            count,
        }
    }

    pub fn meta(&self) -> &GeoMeta {
        &self.meta
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn width(&self) -> usize {
        self.meta.width
    }

    pub fn height(&self) -> usize {
        self.meta.height
    }

    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.labels[self.meta.index(x, y)]
    }

    /// Number of components `K`.
    pub fn count(&self) -> u32 {
        self.count
    }

    /// Pixel count per label; entry 0 is background.
    pub fn areas(&self) -> Vec<usize> {
        let mut areas = vec![0usize; self.count as usize + 1];
        for &l in &self.labels {
            areas[l as usize] += 1;
        }
        areas
    }

    pub fn foreground(&self) -> BinaryMask {
        BinaryMask {
            meta: self.meta.clone(),
            bits: self.labels.iter().map(|&l| l != 0).collect(),
        }
    }

    /// Pixel sets of components `1..=K`, in label order.
    pub fn components(&self) -> Vec<crate::PixelSet> {
        let mut sets = vec![Vec::new(); self.count as usize];
        for (i, &l) in self.labels.iter().enumerate() {
            if l != 0 {
                sets[l as usize - 1].push(i as u32);
            }
        }
        sets.into_iter()
            .map(crate::PixelSet::from_sorted_unchecked)
            .collect()
    }
}

/// 8-bit RGB raster, row-major, 3 bytes per pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbRaster {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl RgbRaster {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0; width * height * 3],
        }
    }

    pub fn from_data(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != width * height * 3 {
            return Err(Error::format(format!(
                "expected {} RGB bytes, got {}",
                width * height * 3,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn put(&mut self, index: usize, rgb: [u8; 3]) {
        self.data[index * 3..index * 3 + 3].copy_from_slice(&rgb);
    }

    pub fn pixels(&self) -> impl Iterator<Item = [u8; 3]> + '_ {
        self.data.chunks_exact(3).map(|c| [c[0], c[1], c[2]])
    }

    pub fn count_color(&self, rgb: [u8; 3]) -> usize {
        self.pixels().filter(|&p| p == rgb).count()
    }

    pub fn to_ppm_bytes(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.data);
        out
    }

    pub fn save_ppm(&self, path: impl AsRef<Path>) -> Result<()> {
        write_file(path.as_ref(), &self.to_ppm_bytes())
    }

    pub fn load_ppm(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let (header, raster) = parse_netpbm(&bytes, b"P6")?;
        if header.maxval != 255 {
            return Err(Error::format("only maxval 255 PPM is supported"));
        }
        Self::from_data(header.width, header.height, raster.to_vec())
    }
}

/// Thresholds confidences into a mask: bit `i` is set iff `values[i] >= tau`.
pub fn threshold(grid: &ConfidenceGrid, tau: f64) -> Result<BinaryMask> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::argument(format!("tau must be in [0, 1], got {tau}")));
    }
    let bits = grid.values.iter().map(|&v| f64::from(v) >= tau).collect();
    Ok(BinaryMask {
        meta: grid.meta.clone(),
        bits,
    })
}

/// Flight altitude (m) against ground sampling distance (m/pixel) for the
/// survey camera.
pub const ALTITUDE_GSD_TABLE: [(f64, f64); 8] = [
    (50.0, 0.017),
    (60.0, 0.021),
    (70.0, 0.025),
    (80.0, 0.028),
    (90.0, 0.032),
    (100.0, 0.035),
    (110.0, 0.039),
    (120.0, 0.043),
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GsdLookup {
    pub gsd_m: f64,
    /// Set when the altitude lies outside the tabulated 50 to 120 m range.
    pub extrapolated: bool,
}

/// Piecewise-linear interpolation over [`ALTITUDE_GSD_TABLE`]; outside the
/// table the nearest two rows are extended linearly.
pub fn altitude_to_gsd(altitude_m: f64) -> Result<GsdLookup> {
    if !(altitude_m.is_finite() && altitude_m > 0.0) {
        return Err(Error::argument(format!(
            "altitude must be > 0 m, got {altitude_m}"
        )));
    }
    let table = &ALTITUDE_GSD_TABLE;
    let (lo_alt, hi_alt) = (table[0].0, table[table.len() - 1].0);
    let extrapolated = altitude_m < lo_alt || altitude_m > hi_alt;

    if let Some(&(_, g)) = table.iter().find(|(a, _)| *a == altitude_m) {
        return Ok(GsdLookup {
            gsd_m: g,
            extrapolated,
        });
    }
    let seg = table
        .windows(2)
        .position(|w| altitude_m < w[1].0)
        .unwrap_or(table.len() - 2);
    let ((a0, g0), (a1, g1)) = (table[seg], table[seg + 1]);
    let t = (altitude_m - a0) / (a1 - a0);
    let gsd_m = g0 + t * (g1 - g0);
    if gsd_m <= 0.0 {
        return Err(Error::argument(format!(
            "altitude {altitude_m} m extrapolates to a non-positive GSD"
        )));
    }
    Ok(GsdLookup {
        gsd_m,
        extrapolated,
    })
}

/// Loads a confidence grid from an FGRID file or an 8-bit binary PGM.
///
/// PGM samples are divided by 255. A PGM comment of the form `# gsd_m=<v>`
/// sets the GSD; without one, [`DEFAULT_PGM_GSD_M`] is assumed.
pub fn load_confidence_grid(path: impl AsRef<Path>) -> Result<ConfidenceGrid> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(FGRID_MAGIC) {
        decode_fgrid(&bytes)
    } else if bytes.starts_with(b"P5") {
        decode_pgm_confidence(&bytes)
    } else {
        Err(Error::format(format!(
            "{}: neither an FGRID nor a P5 PGM file",
            path.display()
        )))
    }
}

/// Writes `grid` as FGRID; reloading yields identical values bit for bit.
pub fn save_confidence_grid(grid: &ConfidenceGrid, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &encode_fgrid(grid))
}

/// Writes `grid` as an 8-bit PGM (values quantized to `round(v * 255)`).
pub fn save_confidence_pgm(grid: &ConfidenceGrid, path: impl AsRef<Path>) -> Result<()> {
    let samples = grid
        .values
        .iter()
        .map(|&v| (v * 255.0).round() as u8)
        .collect::<Vec<_>>();
    write_file(path.as_ref(), &encode_pgm(&grid.meta, &samples))
}

pub fn save_mask_pgm(mask: &BinaryMask, path: impl AsRef<Path>) -> Result<()> {
    let samples = mask
        .bits
        .iter()
        .map(|&b| if b { 255 } else { 0 })
        .collect::<Vec<_>>();
    write_file(path.as_ref(), &encode_pgm(&mask.meta, &samples))
}

/// Loads a PGM mask; any nonzero sample is foreground.
pub fn load_mask_pgm(path: impl AsRef<Path>) -> Result<BinaryMask> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let (header, raster) = parse_netpbm(&bytes, b"P5")?;
    let meta = GeoMeta::new(
        header.width,
        header.height,
        header.gsd_m.unwrap_or(DEFAULT_PGM_GSD_M),
    )
    .map_err(|e| Error::format(e.to_string()))?;
    BinaryMask::new(meta, raster.iter().map(|&s| s != 0).collect())
}

/// GSD assumed for PGM inputs that carry no `gsd_m` comment.
pub const DEFAULT_PGM_GSD_M: f64 = 0.03;

pub fn encode_fgrid(grid: &ConfidenceGrid) -> Vec<u8> {
    let meta = &grid.meta;
    let mut out = Vec::with_capacity(FGRID_HEADER_LEN + 4 * grid.values.len());
    out.extend_from_slice(FGRID_MAGIC);
    out.extend_from_slice(&(meta.width as u32).to_le_bytes());
    out.extend_from_slice(&(meta.height as u32).to_le_bytes());
    out.extend_from_slice(&(meta.gsd_m as f32).to_le_bytes());
    out.extend_from_slice(&(meta.altitude_m.map_or(f32::NAN, |a| a as f32)).to_le_bytes());
    for v in &grid.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_fgrid(bytes: &[u8]) -> Result<ConfidenceGrid> {
    if bytes.len() < FGRID_HEADER_LEN || !bytes.starts_with(FGRID_MAGIC) {
        return Err(Error::format("truncated or missing FGRID header"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let f32_at = |o: usize| f32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let width = u32_at(4) as usize;
    let height = u32_at(8) as usize;
    let gsd = f32_at(12);
    let altitude = f32_at(16);

    let mut meta = GeoMeta::new(width, height, widen(gsd))
        .map_err(|e| Error::format(format!("bad FGRID header: {e}")))?;
    if !altitude.is_nan() {
        meta.altitude_m = Some(widen(altitude));
    }

    let payload = &bytes[FGRID_HEADER_LEN..];
    if payload.len() != 4 * meta.len() {
        return Err(Error::format(format!(
            "FGRID declares {}x{} = {} values but carries {} payload bytes",
            width,
            height,
            meta.len(),
            payload.len()
        )));
    }
    let values = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    ConfidenceGrid::new(meta, values)
}

/// Widens an `f32` header field through its shortest decimal form, so a
/// stored `0.017f32` reads back as `0.017f64` rather than `0.01700000092...`.
fn widen(v: f32) -> f64 {
    format!("{v}").parse().unwrap_or(f64::from(v))
}

fn decode_pgm_confidence(bytes: &[u8]) -> Result<ConfidenceGrid> {
    let (header, raster) = parse_netpbm(bytes, b"P5")?;
    if header.maxval != 255 {
        return Err(Error::format(format!(
            "PGM maxval must be 255, got {}",
            header.maxval
        )));
    }
    let meta = GeoMeta::new(
        header.width,
        header.height,
        header.gsd_m.unwrap_or(DEFAULT_PGM_GSD_M),
    )
    .map_err(|e| Error::format(e.to_string()))?;
    let values = raster.iter().map(|&s| f32::from(s) / 255.0).collect();
    ConfidenceGrid::new(meta, values)
}

fn encode_pgm(meta: &GeoMeta, samples: &[u8]) -> Vec<u8> {
    let mut out = format!(
        "P5\n# gsd_m={}\n{} {}\n255\n",
        meta.gsd_m, meta.width, meta.height
    )
    .into_bytes();
    out.extend_from_slice(samples);
    out
}

struct NetpbmHeader {
    width: usize,
    height: usize,
    maxval: u32,
    gsd_m: Option<f64>,
}

/// Parses a binary netpbm header (P5/P6) and returns the raster bytes.
fn parse_netpbm<'a>(bytes: &'a [u8], magic: &[u8; 2]) -> Result<(NetpbmHeader, &'a [u8])> {
    if !bytes.starts_with(magic) {
        return Err(Error::format(format!(
            "expected {} magic",
            String::from_utf8_lossy(magic)
        )));
    }
    let mut pos = 2;
    let mut fields = [0u64; 3];
    let mut gsd_m = None;
    for field in fields.iter_mut() {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    let end = bytes[pos..]
                        .iter()
                        .position(|&b| b == b'\n')
                        .map_or(bytes.len(), |e| pos + e);
                    let comment = String::from_utf8_lossy(&bytes[pos + 1..end]);
                    if let Some(v) = comment.trim().strip_prefix("gsd_m=") {
                        gsd_m = Some(
                            v.trim()
                                .parse::<f64>()
                                .map_err(|_| Error::format(format!("bad gsd_m comment {v:?}")))?,
                        );
                    }
                    pos = end;
                }
                Some(_) => break,
                None => return Err(Error::format("truncated netpbm header")),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(Error::format("malformed netpbm header"));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .unwrap()
            .parse()
            .map_err(|_| Error::format("netpbm header number overflow"))?;
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::format("missing whitespace after netpbm maxval"));
    }
    pos += 1;
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 || maxval == 0 || maxval > 255 {
        return Err(Error::format(format!(
            "unsupported netpbm header {width}x{height} maxval {maxval}"
        )));
    }
    let channels = if magic == b"P6" { 3 } else { 1 };
    let expected = (width as usize)
        .checked_mul(height as usize)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| Error::format("netpbm dimensions overflow"))?;
    let raster = &bytes[pos..];
    if raster.len() != expected {
        return Err(Error::format(format!(
            "netpbm raster has {} bytes, expected {expected}",
            raster.len()
        )));
    }
    Ok((
        NetpbmHeader {
            width: width as usize,
            height: height as usize,
            maxval: maxval as u32,
            gsd_m,
        },
        raster,
    ))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}
