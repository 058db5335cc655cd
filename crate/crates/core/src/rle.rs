//! Row-major run-length encoding of pixel sets as `[start_index, run_length]`
//! pairs, the form used for `pixels_rle` in detection files.

use crate::error::{Error, Result};
use crate::pixels::PixelSet;

pub fn encode(pixels: &PixelSet) -> Vec<[u64; 2]> {
    let mut runs: Vec<[u64; 2]> = Vec::new();
    for &i in pixels.indices() {
        let i = u64::from(i);
        match runs.last_mut() {
            Some([start, len]) if *start + *len == i => *len += 1,
            _ => runs.push([i, 1]),
        }
    }
    runs
}

/// Decodes runs back into a pixel set. Runs must be nonempty, ascending,
/// and non-overlapping; touching runs are accepted.
pub fn decode(runs: &[[u64; 2]]) -> Result<PixelSet> {
    let mut out = Vec::with_capacity(runs.iter().map(|r| r[1] as usize).sum());
    let mut next_free = 0u64;
    for &[start, len] in runs {
        if len == 0 {
            return Err(Error::format("zero-length run"));
        }
        if start < next_free {
            return Err(Error::format("runs overlap or are out of order"));
        }
        let end = start
            .checked_add(len)
            .filter(|&e| e <= u64::from(u32::MAX) + 1)
            .ok_or_else(|| Error::format("run exceeds index range"))?;
        out.extend((start..end).map(|i| i as u32));
        next_free = end;
    }
    Ok(PixelSet::from_sorted_unchecked(out))
}
