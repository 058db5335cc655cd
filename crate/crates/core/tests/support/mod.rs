//! Brute-force reference implementations used to check the production code.
//! Nothing here calls into the code paths it checks.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap, VecDeque};

use rand::Rng;
use shs_core::{Connectivity, DetectedObject, GeoMeta, GroundTruthObject, PixelSet};

pub fn random_mask<R: Rng>(rng: &mut R, w: usize, h: usize, density: f64) -> Vec<bool> {
    (0..w * h).map(|_| rng.gen_bool(density)).collect()
}

fn neighbors(x: usize, y: usize, w: usize, h: usize, conn: Connectivity) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(8);
    for dy in -1i64..=1 {
        for dx in -1i64..=1 {
            if dx == 0 && dy == 0 {
                continue;
            }
            if conn == Connectivity::Four && dx != 0 && dy != 0 {
                continue;
            }
            let (nx, ny) = (x as i64 + dx, y as i64 + dy);
            if nx >= 0 && ny >= 0 && (nx as usize) < w && (ny as usize) < h {
                out.push((nx as usize, ny as usize));
            }
        }
    }
    out
}

/// Breadth-first flood fill labelling, components numbered in scan order.
pub fn flood_fill(bits: &[bool], w: usize, h: usize, conn: Connectivity) -> Vec<u32> {
    let mut labels = vec![0u32; w * h];
    let mut next = 0u32;
    for start in 0..w * h {
        if !bits[start] || labels[start] != 0 {
            continue;
        }
        next += 1;
        labels[start] = next;
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            for (nx, ny) in neighbors(i % w, i / w, w, h, conn) {
                let j = ny * w + nx;
                if bits[j] && labels[j] == 0 {
                    labels[j] = next;
                    queue.push_back(j);
                }
            }
        }
    }
    labels
}

/// True when both labellings induce the same partition of the pixels
/// (background matched to background).
pub fn same_partition(a: &[u32], b: &[u32]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut ab: HashMap<u32, u32> = HashMap::new();
    let mut ba: HashMap<u32, u32> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        if (x == 0) != (y == 0) {
            return false;
        }
        if *ab.entry(x).or_insert(y) != y || *ba.entry(y).or_insert(x) != x {
            return false;
        }
    }
    true
}

/// Dilation by checking every pixel's Chebyshev neighbourhood.
pub fn brute_dilate(bits: &[bool], w: usize, h: usize, r: usize) -> Vec<bool> {
    let r = r as i64;
    (0..w * h)
        .map(|i| {
            let (x, y) = ((i % w) as i64, (i / w) as i64);
            (-r..=r).any(|dy| {
                (-r..=r).any(|dx| {
                    let (nx, ny) = (x + dx, y + dy);
                    nx >= 0
                        && ny >= 0
                        && nx < w as i64
                        && ny < h as i64
                        && bits[(ny * w as i64 + nx) as usize]
                })
            })
        })
        .collect()
}

/// Merges pre-dilation fragments that share a dilated component: two
/// fragments end up together iff a path of dilated pixels joins them.
pub fn regroup_oracle(
    pre: &[u32],
    dilated: &[bool],
    w: usize,
    h: usize,
    conn: Connectivity,
) -> Vec<u32> {
    let grouped = flood_fill(dilated, w, h, conn);
    pre.iter()
        .zip(&grouped)
        .map(|(&p, &g)| if p == 0 { 0 } else { g })
        .collect()
}

pub fn block(w: usize, x0: usize, y0: usize, bw: usize, bh: usize) -> PixelSet {
    PixelSet::from_xy(
        w,
        (y0..y0 + bh).flat_map(|y| (x0..x0 + bw).map(move |x| (x, y))),
    )
}

pub fn random_block<R: Rng>(rng: &mut R, w: usize, h: usize) -> PixelSet {
    let bw = rng.gen_range(1..=4);
    let bh = rng.gen_range(1..=4);
    let x0 = rng.gen_range(0..=w - bw);
    let y0 = rng.gen_range(0..=h - bh);
    block(w, x0, y0, bw, bh)
}

/// Random matching instance on a small frame so that objects overlap often.
pub fn random_instance<R: Rng>(
    rng: &mut R,
    max_preds: usize,
    max_truths: usize,
) -> (GeoMeta, Vec<DetectedObject>, Vec<GroundTruthObject>) {
    let (w, h) = (8, 8);
    let meta = GeoMeta::new(w, h, 0.03).unwrap();
    let n_truth = rng.gen_range(0..=max_truths);
    let n_pred = rng.gen_range(0..=max_preds);
    let truths = (0..n_truth)
        .map(|k| GroundTruthObject::new(k as i64 + 1, random_block(rng, w, h), 0.03))
        .collect();
    // coarse confidence levels so ties occur
    let preds = (0..n_pred)
        .map(|k| DetectedObject {
            id: k as u32 + 1,
            pixels: random_block(rng, w, h),
            confidence: f64::from(rng.gen_range(1..=5u8)) / 5.0,
        })
        .collect();
    (meta, preds, truths)
}

fn iou_brute(a: &PixelSet, b: &PixelSet) -> f64 {
    let sa: BTreeSet<usize> = a.iter().collect();
    let sb: BTreeSet<usize> = b.iter().collect();
    let inter = sa.intersection(&sb).count();
    let union = sa.union(&sb).count();
    inter as f64 / union as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleConfusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    /// (pred id, truth id) sorted by pred id.
    pub pairs: Vec<(u32, i64)>,
}

/// Enumerates every one-to-one partial assignment of the kept predictions
/// (confidence >= tau) to truths with IoU >= iou_min, and keeps the one whose
/// per-prediction outcomes are lexicographically best when predictions are
/// taken by confidence (ties by id). An outcome ranks higher with larger IoU,
/// then with an earlier truth; being unmatched ranks lowest.
pub fn exhaustive_match(
    preds: &[DetectedObject],
    truths: &[GroundTruthObject],
    iou_min: f64,
    tau: f64,
) -> OracleConfusion {
    let mut kept: Vec<&DetectedObject> = preds.iter().filter(|p| p.confidence >= tau).collect();
    kept.sort_by(|a, b| {
        b.confidence
            .partial_cmp(&a.confidence)
            .unwrap()
            .then(a.id.cmp(&b.id))
    });
    let iou: Vec<Vec<f64>> = kept
        .iter()
        .map(|p| {
            truths
                .iter()
                .map(|t| iou_brute(&p.pixels, &t.pixels))
                .collect()
        })
        .collect();

    // key element per prediction: (iou, -truth index) or None for unmatched
    type Key = Vec<Option<(f64, i64)>>;
    fn better(a: &Key, b: &Key) -> bool {
        for (x, y) in a.iter().zip(b) {
            let ord = match (x, y) {
                (None, None) => std::cmp::Ordering::Equal,
                (None, Some(_)) => std::cmp::Ordering::Less,
                (Some(_), None) => std::cmp::Ordering::Greater,
                (Some((i1, t1)), Some((i2, t2))) => i1.partial_cmp(i2).unwrap().then(t1.cmp(t2)),
            };
            if ord != std::cmp::Ordering::Equal {
                return ord == std::cmp::Ordering::Greater;
            }
        }
        false
    }

    let mut best: Option<(Key, Vec<Option<usize>>)> = None;
    let mut current: Vec<Option<usize>> = vec![None; kept.len()];
    let mut used = vec![false; truths.len()];

    fn recurse(
        k: usize,
        iou: &[Vec<f64>],
        iou_min: f64,
        current: &mut Vec<Option<usize>>,
        used: &mut Vec<bool>,
        best: &mut Option<(Key, Vec<Option<usize>>)>,
        better: fn(&Key, &Key) -> bool,
    ) {
        if k == current.len() {
            let key: Key = current
                .iter()
                .enumerate()
                .map(|(p, a)| a.map(|t| (iou[p][t], -(t as i64))))
                .collect();
            if best.as_ref().is_none_or(|(b, _)| better(&key, b)) {
                *best = Some((key, current.clone()));
            }
            return;
        }
        current[k] = None;
        recurse(k + 1, iou, iou_min, current, used, best, better);
        for t in 0..used.len() {
            if !used[t] && iou[k][t] >= iou_min {
                used[t] = true;
                current[k] = Some(t);
                recurse(k + 1, iou, iou_min, current, used, best, better);
                current[k] = None;
                used[t] = false;
            }
        }
    }
    recurse(0, &iou, iou_min, &mut current, &mut used, &mut best, better);

    let assignment = best.map(|(_, a)| a).unwrap_or_default();
    let mut pairs: Vec<(u32, i64)> = assignment
        .iter()
        .enumerate()
        .filter_map(|(p, a)| a.map(|t| (kept[p].id, truths[t].id)))
        .collect();
    pairs.sort();
    OracleConfusion {
        tp: pairs.len(),
        fp: kept.len() - pairs.len(),
        fn_: truths.len() - pairs.len(),
        pairs,
    }
}

/// PR points computed by re-running the exhaustive matcher at every
/// distinct confidence.
pub fn brute_pr_points(
    preds: &[DetectedObject],
    truths: &[GroundTruthObject],
    iou_min: f64,
) -> Vec<(f64, f64, f64)> {
    let mut taus: Vec<f64> = preds.iter().map(|p| p.confidence).collect();
    taus.sort_by(|a, b| b.partial_cmp(a).unwrap());
    taus.dedup();
    taus.into_iter()
        .map(|tau| {
            let c = exhaustive_match(preds, truths, iou_min, tau);
            let p = if c.tp + c.fp == 0 {
                1.0
            } else {
                c.tp as f64 / (c.tp + c.fp) as f64
            };
            (tau, p, c.tp as f64 / truths.len() as f64)
        })
        .collect()
}
