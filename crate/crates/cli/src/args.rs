use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use shs_core::{Connectivity, PostprocessParams, ScoringParams};

#[derive(Debug, Parser)]
#[command(
    name = "shs",
    version,
    about = "Small solar panel detection scoring and UAV survey costing"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Minimum IoU for a detection to match a truth object.
    #[arg(long, global = true, default_value_t = 0.2)]
    pub iou: f64,
    /// Seed threshold applied to confidence maps.
    #[arg(long, global = true, default_value_t = 0.5)]
    pub tau_seed: f64,
    /// Components smaller than this ground area are dropped.
    #[arg(long, global = true, default_value_t = 0.02)]
    pub min_area_m2: f64,
    #[arg(long, global = true, default_value_t = 2)]
    pub dilate_px: usize,
    /// 4 or 8.
    #[arg(long, global = true, default_value_t = 8, value_parser = parse_connectivity)]
    pub connectivity: u8,
    /// Worker threads; 0 uses all cores.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
}

fn parse_connectivity(s: &str) -> Result<u8, String> {
    match s {
        "4" => Ok(4),
        "8" => Ok(8),
        _ => Err(format!("connectivity must be 4 or 8, got {s}")),
    }
}

impl GlobalArgs {
    pub fn postprocess(&self) -> PostprocessParams {
        PostprocessParams {
            tau_seed: self.tau_seed,
            connectivity: Connectivity::try_from(self.connectivity).unwrap_or_default(),
            min_area_m2: self.min_area_m2,
            dilation_radius_px: self.dilate_px,
        }
    }

    pub fn scoring(&self) -> ScoringParams {
        ScoringParams { iou_min: self.iou }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score confidence maps against polygon annotations.
    Eval(EvalArgs),
    /// Simulate a coarser ground sampling distance.
    GsdSim(GsdSimArgs),
    /// Estimate the cost of a survey mission.
    Cost(CostArgs),
    /// Unit cost over a list of mission areas.
    CostCurve(CostCurveArgs),
    /// Compare UAV unit cost with other platforms.
    Compare(CompareArgs),
    /// Draw TP/FP/FN objects as a PPM image.
    Render(RenderArgs),
    /// Rasterize an annotation file into a mask.
    Rasterize(RasterizeArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GroupBy {
    Tag,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Directory of confidence maps (.fgrid or .pgm).
    pub pred_dir: PathBuf,
    /// Directory of annotation files (.json).
    pub truth_dir: PathBuf,
    /// CSV with `pred,truth` columns pairing files explicitly.
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub group_by: Option<GroupBy>,
}

#[derive(Debug, Args)]
pub struct GsdSimArgs {
    /// FGRID, PGM or PPM raster.
    pub input: PathBuf,
    #[arg(long)]
    pub target_gsd: f64,
    /// Source GSD for PPM input.
    #[arg(long)]
    pub source_gsd: Option<f64>,
    /// Output file; defaults to the input file name under --out.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AssumptionArgs {
    /// Cost assumptions JSON; falls back to $SHS_ASSUMPTIONS, then built-in defaults.
    #[arg(long)]
    pub assumptions: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CostArgs {
    /// Mission area in km².
    #[arg(long)]
    pub area: f64,
    #[arg(long, default_value_t = 0.03)]
    pub gsd: f64,
    #[command(flatten)]
    pub assumptions: AssumptionArgs,
    /// Platform list JSON for a break-even comparison.
    #[arg(long)]
    pub platforms: Option<PathBuf>,
    /// Comma-separated areas for a unit-cost curve.
    #[arg(long, value_delimiter = ',')]
    pub curve: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct CostCurveArgs {
    #[arg(long, default_value_t = 0.03)]
    pub gsd: f64,
    /// Comma-separated areas in km².
    #[arg(long, value_delimiter = ',', required = true)]
    pub areas: Vec<f64>,
    #[command(flatten)]
    pub assumptions: AssumptionArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub area: f64,
    #[arg(long, default_value_t = 0.03)]
    pub gsd: f64,
    #[arg(long)]
    pub platforms: PathBuf,
    #[command(flatten)]
    pub assumptions: AssumptionArgs,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Confidence map, or a detection JSON file.
    pub pred: PathBuf,
    /// Annotation JSON.
    pub truth: PathBuf,
    /// Object confidence threshold.
    #[arg(long, default_value_t = 0.5)]
    pub tau: f64,
    /// Output PPM; defaults to confusion.ppm under --out.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RasterizeArgs {
    pub annotations: PathBuf,
    /// Output PGM; defaults to <stem>_mask.pgm under --out.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Write outputs here instead of the recorded output directory.
    #[arg(long)]
    pub into: Option<PathBuf>,
}
