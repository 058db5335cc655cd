use std::path::{Path, PathBuf};

use shs_core::annotate::{parse_annotations, rasterize_set, truth_objects};
use shs_core::costmodel::{compare_platforms, curve_to_csv, estimate, unit_cost_curve};
use shs_core::detect::postprocess;
use shs_core::grid::{encode_fgrid, load_confidence_grid, save_confidence_pgm, save_mask_pgm};
use shs_core::resample::{simulate_gsd, simulate_gsd_rgb};
use shs_core::score::{match_detections, render_confusion};
use shs_core::{CostAssumptions, DetectionFile, MissionSpec, Platform, ResampleSpec, RgbRaster};

use crate::args::{
    AssumptionArgs, CompareArgs, CostArgs, CostCurveArgs, GlobalArgs, GsdSimArgs, RasterizeArgs,
    RenderArgs,
};
use crate::error::{read_file, write_file, CliError, CliResult};
use crate::manifest::RunManifest;

pub const ASSUMPTIONS_ENV: &str = "SHS_ASSUMPTIONS";

fn internal(e: impl ToString) -> CliError {
    CliError::Internal(e.to_string())
}

fn to_json(value: &impl serde::Serialize) -> CliResult<String> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(internal)
}

/// Explicit flag, then `$SHS_ASSUMPTIONS`, then the built-in defaults. The
/// chosen source is recorded in the manifest.
fn load_assumptions(
    args: &AssumptionArgs,
    manifest: &mut RunManifest,
) -> CliResult<CostAssumptions> {
    if let Some(path) = &args.assumptions {
        manifest.input(path).param("assumptions", path.display());
        return Ok(CostAssumptions::load(path)?);
    }
    match std::env::var_os(ASSUMPTIONS_ENV).map(PathBuf::from) {
        Some(path) if path.is_file() => {
            manifest.input(&path).param("assumptions", path.display());
            Ok(CostAssumptions::load(&path)?)
        }
        Some(path) => {
            eprintln!(
                "warning: {ASSUMPTIONS_ENV}={} does not exist; using built-in defaults",
                path.display()
            );
            manifest.param("assumptions", "defaults");
            Ok(CostAssumptions::default())
        }
        None => {
            manifest.param("assumptions", "defaults");
            Ok(CostAssumptions::default())
        }
    }
}

fn output_or(global: &GlobalArgs, output: &Option<PathBuf>, default: impl AsRef<Path>) -> PathBuf {
    output.clone().unwrap_or_else(|| global.out.join(default))
}

pub fn gsd_sim(args: &GsdSimArgs, global: &GlobalArgs, argv: &[String]) -> CliResult<()> {
    let spec = ResampleSpec::new(args.target_gsd)?;
    let bytes = read_file(&args.input)?;
    let name = args
        .input
        .file_name()
        .ok_or_else(|| CliError::Input(format!("{}: not a file", args.input.display())))?;
    let output = output_or(global, &args.output, name);

    let mut manifest = RunManifest::new("gsd-sim", global, argv);
    manifest
        .input(&args.input)
        .param("target_gsd", args.target_gsd);

    if bytes.starts_with(b"P6") {
        let source = args
            .source_gsd
            .ok_or_else(|| CliError::Input("PPM input needs --source-gsd".into()))?;
        manifest.param("source_gsd", source);
        if spec.factor(source)? == 1.0 {
            write_file(&output, &bytes)?;
        } else {
            let raster = RgbRaster::load_ppm(&args.input)?;
            write_file(
                &output,
                simulate_gsd_rgb(&raster, source, &spec)?.to_ppm_bytes(),
            )?;
        }
    } else {
        let mut grid = load_confidence_grid(&args.input)?;
        if let Some(source) = args.source_gsd {
            let mut meta = grid.meta().clone();
            meta.gsd_m = source;
            grid = grid.with_meta(meta)?;
        }
        manifest.param("source_gsd", grid.meta().gsd_m);
        let factor = spec.factor(grid.meta().gsd_m)?;
        manifest.param("factor", factor);
        if factor == 1.0 {
            write_file(&output, &bytes)?;
        } else {
            let degraded = simulate_gsd(&grid, &spec)?;
            if bytes.starts_with(b"P5") {
                if let Some(dir) = output.parent().filter(|d| !d.as_os_str().is_empty()) {
                    std::fs::create_dir_all(dir).map_err(internal)?;
                }
                save_confidence_pgm(&degraded, &output).map_err(internal)?;
            } else {
                write_file(&output, encode_fgrid(&degraded))?;
            }
        }
    }
    manifest.param("output", output.display());
    manifest.write(&global.out)
}

pub fn cost(args: &CostArgs, global: &GlobalArgs, argv: &[String]) -> CliResult<()> {
    let mut manifest = RunManifest::new("cost", global, argv);
    let a = load_assumptions(&args.assumptions, &mut manifest)?;
    manifest
        .param("area_km2", args.area)
        .param("gsd_m", args.gsd);
    let spec = MissionSpec::new(args.area, args.gsd)?;
    let breakdown = to_json(&estimate(&spec, &a)?.rounded())?;
    write_file(&global.out.join("cost.json"), &breakdown)?;
    print!("{breakdown}");

    if let Some(path) = &args.platforms {
        manifest.input(path);
        let platforms = Platform::load_list(path)?;
        let comparison = compare_platforms(&spec, &a, &platforms)?;
        write_file(&global.out.join("comparison.csv"), comparison.to_csv())?;
    }
    if let Some(areas) = &args.curve {
        let list: Vec<String> = areas.iter().map(f64::to_string).collect();
        manifest.param("curve", list.join(","));
        let points = unit_cost_curve(args.gsd, areas, &a)?;
        write_file(&global.out.join("cost_curve.csv"), curve_to_csv(&points))?;
    }
    manifest.write(&global.out)
}

pub fn cost_curve(args: &CostCurveArgs, global: &GlobalArgs, argv: &[String]) -> CliResult<()> {
    let mut manifest = RunManifest::new("cost-curve", global, argv);
    let a = load_assumptions(&args.assumptions, &mut manifest)?;
    let list: Vec<String> = args.areas.iter().map(f64::to_string).collect();
    manifest
        .param("gsd_m", args.gsd)
        .param("areas", list.join(","));
    let csv = curve_to_csv(&unit_cost_curve(args.gsd, &args.areas, &a)?);
    write_file(&global.out.join("cost_curve.csv"), &csv)?;
    print!("{csv}");
    manifest.write(&global.out)
}

pub fn compare(args: &CompareArgs, global: &GlobalArgs, argv: &[String]) -> CliResult<()> {
    let mut manifest = RunManifest::new("compare", global, argv);
    let a = load_assumptions(&args.assumptions, &mut manifest)?;
    manifest
        .input(&args.platforms)
        .param("area_km2", args.area)
        .param("gsd_m", args.gsd);
    let spec = MissionSpec::new(args.area, args.gsd)?;
    let platforms = Platform::load_list(&args.platforms)?;
    let csv = compare_platforms(&spec, &a, &platforms)?.to_csv();
    write_file(&global.out.join("comparison.csv"), &csv)?;
    print!("{csv}");
    manifest.write(&global.out)
}

pub fn render(args: &RenderArgs, global: &GlobalArgs, argv: &[String]) -> CliResult<()> {
    let scoring = global.scoring();
    let set = parse_annotations(&args.truth)?;
    let preds = if args
        .pred
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
    {
        let text = String::from_utf8(read_file(&args.pred)?)
            .map_err(|_| CliError::Input(format!("{}: not UTF-8", args.pred.display())))?;
        let file = DetectionFile::from_json(&text)?;
        if file
            .width
            .zip(file.height)
            .is_some_and(|d| d != (set.meta.width, set.meta.height))
        {
            return Err(CliError::Input(
                "detection file and annotations differ in size".into(),
            ));
        }
        file.objects()?
    } else {
        let grid = load_confidence_grid(&args.pred)?;
        if !grid.meta().same_dims(&set.meta) {
            return Err(CliError::Input(
                "confidence map and annotations differ in size".into(),
            ));
        }
        postprocess(&grid.with_meta(set.meta.clone())?, &global.postprocess())?
    };
    let truths = truth_objects(&set)?;
    for w in truths.warnings() {
        eprintln!("warning: {w}");
    }
    let image = render_confusion(&preds, &truths.objects, &scoring, args.tau, &set.meta)?;
    let output = output_or(global, &args.output, "confusion.ppm");
    write_file(&output, image.to_ppm_bytes())?;

    let c = match_detections(&preds, &truths.objects, &scoring, args.tau);
    println!("tp={} fp={} fn={}", c.tp, c.fp, c.fn_);

    let mut manifest = RunManifest::new("render", global, argv);
    manifest
        .input(&args.pred)
        .input(&args.truth)
        .param("tau", args.tau)
        .param("output", output.display());
    manifest.write(&global.out)
}

pub fn rasterize(args: &RasterizeArgs, global: &GlobalArgs, argv: &[String]) -> CliResult<()> {
    let set = parse_annotations(&args.annotations)?;
    let mask = rasterize_set(&set)?;
    let stem = args
        .annotations
        .file_stem()
        .unwrap_or_default()
        .to_string_lossy();
    let output = output_or(global, &args.output, format!("{stem}_mask.pgm"));
    if let Some(dir) = output.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(internal)?;
    }
    save_mask_pgm(&mask, &output).map_err(internal)?;
    println!("{} foreground pixels", mask.count());

    let mut manifest = RunManifest::new("rasterize", global, argv);
    manifest
        .input(&args.annotations)
        .param("output", output.display());
    manifest.write(&global.out)
}
