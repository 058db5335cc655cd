use std::collections::BTreeMap;
use std::ffi::OsStr;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use shs_core::annotate::{parse_annotations, truth_objects};
use shs_core::detect::postprocess;
use shs_core::grid::load_confidence_grid;
use shs_core::score::DetectionTally;
use shs_core::{DetectionFile, ScoringParams};

use crate::args::{EvalArgs, GlobalArgs, GroupBy};
use crate::error::{read_file, write_file, CliError, CliResult};
use crate::manifest::RunManifest;

const PRED_EXTENSIONS: [&str; 2] = ["fgrid", "pgm"];

#[derive(Debug, Clone, PartialEq)]
pub struct ImagePair {
    pub stem: String,
    pub pred: PathBuf,
    pub truth: PathBuf,
}

struct ImageResult {
    stem: String,
    tag: Option<String>,
    tally: DetectionTally,
    detections: String,
    warnings: Vec<String>,
}

fn stem_of(path: &Path) -> Option<String> {
    path.file_stem().and_then(OsStr::to_str).map(str::to_owned)
}

fn list_dir(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let entries =
        std::fs::read_dir(dir).map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry
            .map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?
            .path();
        if path.is_file() {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn has_extension(path: &Path, exts: &[&str]) -> bool {
    path.extension()
        .and_then(OsStr::to_str)
        .is_some_and(|e| exts.iter().any(|x| e.eq_ignore_ascii_case(x)))
}

/// Pairs every annotation file with the confidence map of the same stem.
pub fn pair_by_stem(pred_dir: &Path, truth_dir: &Path) -> CliResult<Vec<ImagePair>> {
    let mut preds: BTreeMap<String, Vec<PathBuf>> = BTreeMap::new();
    for path in list_dir(pred_dir)? {
        if has_extension(&path, &PRED_EXTENSIONS) {
            if let Some(stem) = stem_of(&path) {
                preds.entry(stem).or_default().push(path);
            }
        }
    }
    let mut pairs = Vec::new();
    let mut missing = Vec::new();
    for truth in list_dir(truth_dir)?
        .into_iter()
        .filter(|p| has_extension(p, &["json"]))
    {
        let Some(stem) = stem_of(&truth) else {
            continue;
        };
        match preds.get(&stem).map(Vec::as_slice) {
            None | Some([]) => missing.push(stem),
            Some([pred]) => pairs.push(ImagePair {
                stem,
                pred: pred.clone(),
                truth,
            }),
            Some(many) => {
                let names: Vec<_> = many.iter().map(|p| p.display().to_string()).collect();
                return Err(CliError::Input(format!(
                    "ambiguous prediction for {stem}: {}",
                    names.join(", ")
                )));
            }
        }
    }
    if !missing.is_empty() {
        return Err(CliError::Input(format!(
            "no confidence map for: {}",
            missing.join(", ")
        )));
    }
    Ok(pairs)
}

/// Reads a `pred,truth` CSV. Relative paths resolve against the prediction
/// and truth directories respectively.
pub fn pair_from_csv(csv: &Path, pred_dir: &Path, truth_dir: &Path) -> CliResult<Vec<ImagePair>> {
    let text = String::from_utf8(read_file(csv)?)
        .map_err(|_| CliError::Input(format!("{}: not UTF-8", csv.display())))?;
    let mut pairs: Vec<ImagePair> = Vec::new();
    let mut missing = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (n == 0 && line.replace(' ', "") == "pred,truth") {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        let [pred, truth] = cols[..] else {
            return Err(CliError::Input(format!(
                "{}:{}: expected 2 columns",
                csv.display(),
                n + 1
            )));
        };
        let pred = pred_dir.join(pred);
        let truth = truth_dir.join(truth);
        let stem = stem_of(&truth).ok_or_else(|| {
            CliError::Input(format!("{}:{}: bad truth path", csv.display(), n + 1))
        })?;
        if !pred.is_file() {
            missing.push(stem);
            continue;
        }
        if pairs.iter().any(|p| p.stem == stem) {
            return Err(CliError::Input(format!(
                "{}: image {stem} listed twice",
                csv.display()
            )));
        }
        pairs.push(ImagePair { stem, pred, truth });
    }
    if !missing.is_empty() {
        return Err(CliError::Input(format!(
            "no confidence map for: {}",
            missing.join(", ")
        )));
    }
    pairs.sort_by(|a, b| a.stem.cmp(&b.stem));
    Ok(pairs)
}

fn score_image(
    pair: &ImagePair,
    global: &GlobalArgs,
    scoring: &ScoringParams,
) -> CliResult<ImageResult> {
    let context = |e: shs_core::Error| CliError::Input(format!("{}: {e}", pair.stem));
    let set = parse_annotations(&pair.truth).map_err(context)?;
    let grid = load_confidence_grid(&pair.pred).map_err(context)?;
    let mut warnings = Vec::new();
    if !grid.meta().same_dims(&set.meta) {
        return Err(CliError::Input(format!(
            "{}: confidence map is {}x{} but annotations are {}x{}",
            pair.stem,
            grid.width(),
            grid.height(),
            set.meta.width,
            set.meta.height
        )));
    }
    let grid_gsd = grid.meta().gsd_m;
    if (grid_gsd - set.meta.gsd_m).abs() > 1e-6 * set.meta.gsd_m {
        warnings.push(format!(
            "{}: confidence map GSD {grid_gsd} differs from annotation GSD {}; using the annotation",
            pair.stem, set.meta.gsd_m
        ));
    }
    let grid = grid.with_meta(set.meta.clone()).map_err(context)?;
    let objects = postprocess(&grid, &global.postprocess()).map_err(context)?;
    let truths = truth_objects(&set).map_err(context)?;
    warnings.extend(truths.warnings());
    Ok(ImageResult {
        stem: pair.stem.clone(),
        tag: set.meta.tag.clone(),
        tally: DetectionTally::from_image(&objects, &truths.objects, scoring),
        detections: DetectionFile::new(&set.image_id, &set.meta, &objects).to_json() + "\n",
        warnings,
    })
}

fn safe_name(tag: &str) -> String {
    tag.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn write_curve(
    out: &Path,
    suffix: &str,
    tally: &DetectionTally,
    scoring: &ScoringParams,
) -> CliResult<()> {
    let curve = tally
        .curve()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    let summary = serde_json::to_string_pretty(&curve.summary(scoring))
        .map_err(|e| CliError::Internal(e.to_string()))?;
    write_file(&out.join(format!("summary{suffix}.json")), summary + "\n")?;
    write_file(&out.join(format!("pr_curve{suffix}.csv")), curve.to_csv())
}

pub fn run(args: &EvalArgs, global: &GlobalArgs, argv: &[String]) -> CliResult<()> {
    let scoring = global.scoring();
    scoring.validate()?;
    global.postprocess().validate()?;

    let pairs = match &args.pairs {
        Some(csv) => pair_from_csv(csv, &args.pred_dir, &args.truth_dir)?,
        None => pair_by_stem(&args.pred_dir, &args.truth_dir)?,
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(global.jobs)
        .build()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    let results: Vec<CliResult<ImageResult>> = pool.install(|| {
        pairs
            .par_iter()
            .map(|p| score_image(p, global, &scoring))
            .collect()
    });
    let results = results.into_iter().collect::<CliResult<Vec<_>>>()?;

    let mut pooled = DetectionTally::default();
    let mut groups: BTreeMap<String, DetectionTally> = BTreeMap::new();
    for r in &results {
        for w in &r.warnings {
            eprintln!("warning: {w}");
        }
        pooled.merge(&r.tally);
        if args.group_by == Some(GroupBy::Tag) {
            let key = r
                .tag
                .as_deref()
                .map_or_else(|| "untagged".to_owned(), safe_name);
            groups.entry(key).or_default().merge(&r.tally);
        }
    }
    if pooled.n_truth == 0 {
        return Err(CliError::EmptyTruth(format!(
            "no truth objects in {} annotation file(s)",
            results.len()
        )));
    }

    let out = &global.out;
    for r in &results {
        write_file(
            &out.join("objects").join(format!("{}.json", r.stem)),
            &r.detections,
        )?;
    }
    write_curve(out, "", &pooled, &scoring)?;
    for (tag, tally) in &groups {
        if tally.n_truth == 0 {
            eprintln!("warning: group {tag} has no truth objects; no curve written");
            continue;
        }
        write_curve(out, &format!(".{tag}"), tally, &scoring)?;
    }

    let mut manifest = RunManifest::new("eval", global, argv);
    for p in &pairs {
        manifest.input(&p.pred).input(&p.truth);
    }
    if let Some(g) = args.group_by {
        manifest.param("group_by", format!("{g:?}").to_lowercase());
    }
    if let Some(csv) = &args.pairs {
        manifest.param("pairs", csv.display());
    }
    manifest.param("images", results.len());
    manifest.write(out)
}
