//! Sets of pixels addressed by row-major linear index.

use std::cmp::Ordering;

/// A set of pixels stored as sorted, deduplicated row-major indices
/// (`index = y * width + x`).
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct PixelSet {
    indices: Vec<u32>,
}

impl PixelSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a set from indices in any order; duplicates are removed.
    pub fn from_indices(mut indices: Vec<u32>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        Self { indices }
    }

    /// Builds a set from indices already sorted ascending without duplicates.
    pub(crate) fn from_sorted_unchecked(indices: Vec<u32>) -> Self {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        Self { indices }
    }

    pub fn from_xy(width: usize, coords: impl IntoIterator<Item = (usize, usize)>) -> Self {
        Self::from_indices(
            coords
                .into_iter()
                .map(|(x, y)| (y * width + x) as u32)
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().map(|&i| i as usize)
    }

    pub fn xy(&self, width: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.iter().map(move |i| (i % width, i / width))
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.binary_search(&(index as u32)).is_ok()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.indices.last().map(|&i| i as usize)
    }

    /// Number of pixels present in both sets (sorted merge).
    pub fn intersection_len(&self, other: &PixelSet) -> usize {
        let (a, b) = (&self.indices, &other.indices);
        if a.is_empty() || b.is_empty() || a[a.len() - 1] < b[0] || b[b.len() - 1] < a[0] {
            return 0;
        }
        let (mut i, mut j, mut n) = (0, 0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                Ordering::Less => i += 1,
                Ordering::Greater => j += 1,
                Ordering::Equal => {
                    n += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        n
    }

    pub fn union_len(&self, other: &PixelSet) -> usize {
        self.len() + other.len() - self.intersection_len(other)
    }
}

impl FromIterator<u32> for PixelSet {
    fn from_iter<T: IntoIterator<Item = u32>>(iter: T) -> Self {
        Self::from_indices(iter.into_iter().collect())
    }
}
