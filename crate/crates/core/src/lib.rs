//! Object-wise evaluation of small solar panel detections in UAV imagery,
//! plus a cost model for the surveys that produce that imagery.
//!
//! The crate is organized bottom-up:
//!
//! - [`grid`]: raster types, FGRID/PGM/PPM I/O, thresholding, altitude to GSD.
//! - [`annotate`]: polygon annotations and their rasterization into truth objects.
//! - [`detect`]: the confidence-map post-processing pipeline
//!   (threshold, group, filter, dilate, regroup).
//! - [`score`]: IoU matching, PR curves, AP / F1max, confusion rendering.
//! - [`resample`]: simulated coarser ground sampling distances.
//! - [`costmodel`]: UAV mission cost model and platform comparison.
//! - [`rle`]: run-length encoding of pixel sets for detection files.

pub mod annotate;
pub mod costmodel;
pub mod detect;
pub mod error;
pub mod grid;
pub mod pixels;
pub mod resample;
pub mod rle;
pub mod score;

pub use annotate::{AnnotationSet, GroundTruthObject, PolygonAnnotation, TruthObjects};
pub use costmodel::{CostAssumptions, CostBreakdown, MissionSpec, Platform};
pub use detect::{Connectivity, DetectedObject, DetectionFile, PostprocessParams};
pub use error::{Error, Result};
pub use grid::{BinaryMask, ConfidenceGrid, GeoMeta, LabelGrid, RgbRaster};
pub use pixels::PixelSet;
pub use resample::ResampleSpec;
pub use score::{Confusion, PrCurve, PrPoint, ScoringParams};
