//! `report.json` layout.

use std::collections::BTreeMap;

use burnscan_core::assessment::{ConfusionMatrix, Metrics};
use burnscan_core::raster::GeoTransform;
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;

pub const REPORT_SCHEMA: u32 = 1;

/// JSON Schema describing [`RunReport`], shipped with the binary.
pub const REPORT_JSON_SCHEMA: &str = include_str!("../report.schema.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneUse {
    pub count: usize,
    pub scene_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenes {
    pub pre: SceneUse,
    pub post: SceneUse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Areas {
    /// Pixels at or above the configured class, hectares.
    pub predicted: f64,
    /// Burned pixels of the burn-date reference, hectares.
    pub reference: f64,
    /// Pixels inside hotspot discs, hectares.
    pub hotspots: f64,
    /// `|predicted - reference| / reference`; null for an empty reference.
    pub relative_difference: Option<f64>,
    pub tolerance: f64,
    /// Whether `relative_difference` is within `tolerance`.
    pub agree: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisInfo {
    pub transform: GeoTransform,
    pub width: usize,
    pub height: usize,
    pub pixel_area_m2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: u32,
    pub config: PipelineConfig,
    /// Burnt-area product the registry selects for the reference window.
    pub reference_product: Option<String>,
    pub analysis_grid: AnalysisInfo,
    pub scenes: Scenes,
    pub area_ha: Areas,
    pub matrix: ConfusionMatrix,
    pub metrics: Metrics,
    pub warnings: Vec<String>,
    /// Wall time per stage. Not deterministic.
    pub timings_ms: BTreeMap<String, u64>,
}

/// Agreement-only report written by `burnscan assess`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessReport {
    pub schema: u32,
    pub area_ha: AssessAreas,
    pub matrix: ConfusionMatrix,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessAreas {
    pub predicted: f64,
    pub reference: f64,
}
