//! Acceptance criteria, one line each.
//!
//! Exits nonzero if any criterion fails, except those listed in
//! [`EXPECTED_FAILURES`]; those still run and print FAIL, and the run fails
//! if one of them starts passing so the list cannot go stale.

mod common;
#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use shs_core::costmodel::{estimate, mission_days, pilots_required, unit_cost_curve};
use shs_core::detect::{connected_components, regroup};
use shs_core::resample::simulate_gsd;
use shs_core::score::{f1, match_detections, pr_curve};
use shs_core::{
    BinaryMask, ConfidenceGrid, Connectivity, CostAssumptions, DetectedObject, GeoMeta,
    GroundTruthObject, MissionSpec, ResampleSpec, ScoringParams,
};

use common::{code, p, shs, stderr, synthetic_survey};
use support::{
    block, brute_dilate, brute_pr_points, exhaustive_match, flood_fill, random_block,
    random_instance, random_mask, regroup_oracle, same_partition,
};

type Outcome = Result<String, String>;

/// Criterion number and why it cannot pass.
const EXPECTED_FAILURES: &[(usize, &str)] = &[(
    6,
    "a 0.55 m square covers more than one 0.30 m cell, so any mean-preserving box filter keeps \
     a peak near 0.9; a 10x drop needs an object under about 0.095 m across",
)];
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn mask(w: usize, h: usize, bits: Vec<bool>) -> BinaryMask {
    BinaryMask::new(GeoMeta::new(w, h, 0.03).unwrap(), bits).unwrap()
}

fn c1_f1_arithmetic() -> Outcome {
    let v = f1(0.90, 0.10);
    check((v - 0.18).abs() <= 1e-12, format!("F1(0.90, 0.10) = {v}"))
}

fn c2_postprocess_oracles() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0xACCE_0002);
    for case in 0..1000 {
        let (w, h) = (rng.gen_range(1..=32), rng.gen_range(1..=32));
        let density = rng.gen_range(0.05..0.8);
        let bits = random_mask(&mut rng, w, h, density);
        let m = mask(w, h, bits.clone());
        for conn in [Connectivity::Four, Connectivity::Eight] {
            let ours = connected_components(&m, conn);
            if !same_partition(ours.labels(), &flood_fill(&bits, w, h, conn)) {
                return Err(format!(
                    "components differ on mask {case} ({w}x{h}, {conn:?})"
                ));
            }
        }
    }
    for case in 0..200 {
        let (w, h) = (16, 16);
        let density = rng.gen_range(0.03..0.3);
        let bits = random_mask(&mut rng, w, h, density);
        let conn = if rng.gen_bool(0.5) {
            Connectivity::Four
        } else {
            Connectivity::Eight
        };
        let r = rng.gen_range(0..=3);
        let pre = connected_components(&mask(w, h, bits.clone()), conn);
        let dil = brute_dilate(&bits, w, h, r);
        let ours = regroup(&pre, &mask(w, h, dil.clone()), conn).map_err(|e| e.to_string())?;
        if !same_partition(
            ours.labels(),
            &regroup_oracle(pre.labels(), &dil, w, h, conn),
        ) {
            return Err(format!("regroup differs on case {case}"));
        }
    }
    Ok("1000 masks x 2 connectivities, 200 regroup cases".into())
}

fn c3_matching_oracle() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0xACCE_0003);
    let params = ScoringParams { iou_min: 0.2 };
    for case in 0..500 {
        let (_, preds, truths) = random_instance(&mut rng, 6, 6);
        let ours = match_detections(&preds, &truths, &params, 0.0);
        let oracle = exhaustive_match(&preds, &truths, params.iou_min, 0.0);
        let mut pairs: Vec<(u32, i64)> = ours
            .matches
            .iter()
            .map(|m| (m.pred_id, m.truth_id))
            .collect();
        pairs.sort();
        if (ours.tp, ours.fp, ours.fn_) != (oracle.tp, oracle.fp, oracle.fn_)
            || pairs != oracle.pairs
        {
            return Err(format!(
                "instance {case}: greedy {pairs:?}, exhaustive {:?}",
                oracle.pairs
            ));
        }
    }
    Ok("500 instances agree".into())
}

fn c4_pr_fixture() -> Outcome {
    let w = 20;
    let truths = vec![
        GroundTruthObject::new(1, block(w, 0, 0, 3, 3), 0.03),
        GroundTruthObject::new(2, block(w, 10, 10, 3, 3), 0.03),
    ];
    let preds = vec![
        DetectedObject {
            id: 1,
            pixels: block(w, 0, 0, 3, 3),
            confidence: 0.9,
        },
        DetectedObject {
            id: 2,
            pixels: block(w, 5, 5, 2, 2),
            confidence: 0.8,
        },
        DetectedObject {
            id: 3,
            pixels: block(w, 10, 10, 3, 3),
            confidence: 0.7,
        },
    ];
    let c = pr_curve(&preds, &truths, &ScoringParams::default()).map_err(|e| e.to_string())?;
    let pts: Vec<(f64, f64)> = c.points.iter().map(|q| (q.precision, q.recall)).collect();
    let oracle: Vec<(f64, f64)> = brute_pr_points(&preds, &truths, 0.2)
        .iter()
        .map(|t| (t.1, t.2))
        .collect();
    let expected = [(1.0, 0.5), (0.5, 0.5), (2.0 / 3.0, 1.0)];
    let pts_ok = pts.len() == 3
        && pts
            .iter()
            .zip(&expected)
            .all(|(a, b)| (a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12)
        && pts == oracle;
    check(
        pts_ok
            && (c.ap - 0.8333).abs() <= 1e-4
            && (c.ap - 5.0 / 6.0).abs() <= 1e-6
            && (c.f1_max - 0.8).abs() <= 1e-6
            && c.r_max == 1.0,
        format!(
            "points {pts:?}, ap {:.6}, f1_max {:.6}, r_max {}",
            c.ap, c.f1_max, c.r_max
        ),
    )
}

fn c5_perfect_detector() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0xACCE_0005);
    let params = ScoringParams::default();
    for case in 0..500 {
        let (w, h) = (rng.gen_range(4..24), rng.gen_range(4..24));
        let n = rng.gen_range(1..8);
        let truths: Vec<GroundTruthObject> = (0..n)
            .map(|k| GroundTruthObject::new(k + 1, random_block(&mut rng, w, h), 0.03))
            .collect();
        let preds: Vec<DetectedObject> = truths
            .iter()
            .enumerate()
            .map(|(k, t)| DetectedObject {
                id: k as u32 + 1,
                pixels: t.pixels.clone(),
                confidence: f64::from(rng.gen_range(1..=10u8)) / 10.0,
            })
            .collect();
        let c = pr_curve(&preds, &truths, &params).map_err(|e| e.to_string())?;
        if (c.ap, c.f1_max, c.r_max) != (1.0, 1.0, 1.0) {
            return Err(format!(
                "scene {case}: ap {} f1_max {} r_max {}",
                c.ap, c.f1_max, c.r_max
            ));
        }
    }
    Ok("500 scenes give ap = f1_max = r_max = 1".into())
}

fn c6_resolution_degradation() -> Outcome {
    let (gsd, side_m, target) = (0.017, 0.55, 0.30);
    let n = 300;
    let meta = GeoMeta::new(n, n, gsd).unwrap();
    let (lo, hi) = (
        (n as f64 * gsd - side_m) / 2.0,
        (n as f64 * gsd + side_m) / 2.0,
    );
    let inside = |i: usize| {
        let c = (i as f64 + 0.5) * gsd;
        c >= lo && c < hi
    };
    let values: Vec<f32> = (0..n * n)
        .map(|i| {
            if inside(i % n) && inside(i / n) {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let span = (0..n).filter(|&x| inside(x)).count();
    let grid = ConfidenceGrid::new(meta, values).unwrap();
    let coarse =
        simulate_gsd(&grid, &ResampleSpec::new(target).unwrap()).map_err(|e| e.to_string())?;
    let shrink = f64::from(grid.max()) / f64::from(coarse.max());
    let mean_err = (coarse.mean() - grid.mean()).abs() / grid.mean();
    check(
        span >= 32 && shrink >= 10.0 && mean_err <= 0.01,
        format!(
            "span {span} px (>= 32: {}), peak {:.3} -> {:.3} shrink {shrink:.2}x (>= 10x: {}), mean error {:.3}% (<= 1%: {})",
            span >= 32,
            grid.max(),
            coarse.max(),
            shrink >= 10.0,
            100.0 * mean_err,
            mean_err <= 0.01
        ),
    )
}

fn c7_cost_benchmark() -> Outcome {
    let b = estimate(
        &MissionSpec::new(7500.0, 0.03).unwrap(),
        &CostAssumptions::default(),
    )
    .map_err(|e| e.to_string())?;
    check(
        (b.total - 6.0e6).abs() <= 0.25 * 6.0e6,
        format!(
            "total ${:.0}, {} pilots, {:.1} pilot-days",
            b.total, b.n_pilots, b.day_tot
        ),
    )
}

fn c8_hotel_asymptote() -> Outcome {
    let b = estimate(
        &MissionSpec::new(1e5, 0.03).unwrap(),
        &CostAssumptions::default(),
    )
    .map_err(|e| e.to_string())?;
    check(
        (b.hotel_share - 0.15).abs() <= 0.02,
        format!("hotel share {:.4}", b.hotel_share),
    )
}

fn c9_unit_cost_linearity() -> Outcome {
    let areas = [1.0, 10.0, 1e2, 1e3, 1e4, 1e5];
    let pts =
        unit_cost_curve(0.03, &areas, &CostAssumptions::default()).map_err(|e| e.to_string())?;
    let unit: Vec<f64> = pts.iter().map(|q| q.unit_cost_usd_per_km2).collect();
    let rel = (unit[5] - unit[4]).abs() / unit[4];
    let monotone = unit.windows(2).all(|w| w[1] <= w[0]);
    check(
        rel < 0.05 && monotone,
        format!(
            "1e4 vs 1e5 differ {:.3}%, nonincreasing {monotone}, unit costs {unit:.2?}",
            100.0 * rel
        ),
    )
}

fn c10_day_pilot_table() -> Outcome {
    let defaults = CostAssumptions::default();
    // per-day coverage 0.25 km2/h x 4 h = 1 km2 at 0.03 m; weekend and weather factor 1.4 / 0.875 = 1.6
    let simple = CostAssumptions {
        coverage_per_flight_hour_km2_at_ref: 0.25,
        flight_hours_per_day: 4.0,
        sunny_fraction: 0.875,
        ..CostAssumptions::default()
    };
    let short = CostAssumptions {
        max_mission_days: 30.0,
        ..simple.clone()
    };
    // (area km2, gsd m, assumptions, hand-computed pilot-days, pilots)
    let table: [(f64, f64, &CostAssumptions, f64, u64); 10] = [
        (175.8, 0.03, &defaults, 175.0, 2),
        (1758.0, 0.03, &defaults, 1750.0, 20),
        (7500.0, 0.03, &defaults, 7465.870307167235, 83),
        (56.25, 0.03, &simple, 90.0, 1),
        (56.875, 0.03, &simple, 91.0, 2),
        (112.5, 0.03, &simple, 180.0, 2),
        (113.125, 0.03, &simple, 181.0, 3),
        (112.5, 0.06, &simple, 90.0, 1),
        (56.25, 0.015, &simple, 180.0, 2),
        (56.875, 0.03, &short, 91.0, 4),
    ];
    for (area, gsd, a, days, pilots) in table {
        let d =
            mission_days(&MissionSpec::new(area, gsd).unwrap(), a).map_err(|e| e.to_string())?;
        let n = pilots_required(d, a);
        if d != days || n != pilots {
            return Err(format!(
                "area {area} gsd {gsd}: got {d} days / {n} pilots, expected {days} / {pilots}"
            ));
        }
    }
    Ok("10 cases exact, including 90 -> 1 and 91 -> 2 pilots".into())
}

fn c11_determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (pd, td) = synthetic_survey(tmp.path(), 20, 0xACCE_0011);
    let mut outputs = Vec::new();
    for (run, jobs) in [("a", "1"), ("b", "8"), ("c", "1"), ("d", "8")] {
        let out = tmp.path().join(run);
        let r = shs(&["eval", p(&pd), p(&td), "--jobs", jobs, "--out", p(&out)]);
        if code(&r) != 0 {
            return Err(format!(
                "eval --jobs {jobs} exited {}: {}",
                code(&r),
                stderr(&r)
            ));
        }
        let read = |f: &str| std::fs::read(out.join(f)).map_err(|e| e.to_string());
        outputs.push((read("summary.json")?, read("pr_curve.csv")?));
    }
    let same = outputs.windows(2).all(|w| w[0] == w[1]);
    let rows = String::from_utf8_lossy(&outputs[0].1).lines().count() - 1;
    check(
        same,
        format!("20 images, 2 runs each at --jobs 1 and 8, {rows} curve points, identical {same}"),
    )
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("F1 arithmetic", c1_f1_arithmetic),
        ("post-processing oracle equivalence", c2_postprocess_oracles),
        ("matching oracle equivalence", c3_matching_oracle),
        ("PR/AP fixture", c4_pr_fixture),
        ("perfect detector", c5_perfect_detector),
        ("resolution degradation", c6_resolution_degradation),
        ("cost benchmark", c7_cost_benchmark),
        ("hotel asymptote", c8_hotel_asymptote),
        ("unit-cost linearity", c9_unit_cost_linearity),
        ("pilot/day formulas", c10_day_pilot_table),
        ("determinism", c11_determinism),
    ];
    let (mut passed, mut expected_failures, mut unexpected) = (0, 0, 0);
    for (k, (name, run)) in criteria.iter().enumerate() {
        let number = k + 1;
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        let expected = EXPECTED_FAILURES.iter().find(|(n, _)| *n == number);
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("[{tag}] {number:>2} {name}: {detail} ({secs:.2}s)");
        match (&outcome, expected) {
            (Err(_), Some((_, why))) => {
                println!("          expected failure: {why}");
                expected_failures += 1;
            }
            (Err(_), None) => unexpected += 1,
            (Ok(_), Some(_)) => {
                println!(
                    "          listed as an expected failure but passed; update EXPECTED_FAILURES"
                );
                passed += 1;
                unexpected += 1;
            }
            (Ok(_), None) => passed += 1,
        }
    }
    println!(
        "{passed} of {} criteria passed, {expected_failures} expected failure(s), {unexpected} unexpected result(s)",
        criteria.len()
    );
    if unexpected > 0 {
        std::process::exit(1);
    }
}
