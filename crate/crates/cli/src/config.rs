//! Pipeline configuration file (`"schema": 1`).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use burnscan_core::catalog::{DateWindow, Sensor};
use burnscan_core::preprocess::{BandMap, CompositeMethod, MaskPolicy, MaskRule};
use burnscan_core::raster::{Bounds, RoiPolygon};
use burnscan_core::severity::{SeverityClass, SeverityThresholds};
use burnscan_core::synth::ROMPIN_CENTER;
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const CONFIG_SCHEMA: u32 = 1;

/// Half-width in degrees of the default ROI box around the study center.
const DEFAULT_ROI_HALF_DEG: f64 = 0.05;

/// Cloud masking selection.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Masking {
    /// Per-sensor default policies.
    #[default]
    Default,
    /// No masking for any sensor.
    None,
    /// Explicit rules; sensors not listed use their default.
    Custom(BTreeMap<Sensor, MaskRule>),
}

impl Masking {
    pub fn policies(&self) -> Result<BTreeMap<Sensor, MaskPolicy>, CliError> {
        let sensors = [Sensor::Sentinel2L2A, Sensor::Landsat8TOA, Sensor::Other];
        let mut out = BTreeMap::new();
        for s in sensors {
            let p = match self {
                Masking::Default => MaskPolicy::default_for(s),
                Masking::None => MaskPolicy::none(s),
                Masking::Custom(rules) => match rules.get(&s) {
                    Some(rule) => MaskPolicy::new(s, rule.clone()).map_err(CliError::config)?,
                    None => MaskPolicy::default_for(s),
                },
            };
            out.insert(s, p);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub schema: u32,
    #[serde(default = "default_roi")]
    pub roi: RoiPolygon,
    #[serde(default = "default_pre_window")]
    pub pre_window: DateWindow,
    #[serde(default = "default_post_window")]
    pub post_window: DateWindow,
    /// Scenes need cloud cover strictly below this percentage; `null`
    /// disables the check.
    #[serde(default = "default_max_cloud")]
    pub max_cloud: Option<f64>,
    /// Scene manifests, relative to the config file.
    pub manifests: Vec<PathBuf>,
    #[serde(default)]
    pub sort_by_date: bool,
    #[serde(default)]
    pub band_map: BandMap,
    #[serde(default)]
    pub masking: Masking,
    #[serde(default)]
    pub composite_method: CompositeMethod,
    #[serde(default)]
    pub thresholds: SeverityThresholds,
    pub mcd64_path: PathBuf,
    #[serde(default = "default_mcd64_window")]
    pub mcd64_window: DateWindow,
    pub firms_path: PathBuf,
    #[serde(default = "default_firms_radius")]
    pub firms_radius_m: f64,
    /// Hotspot date filter; defaults to `mcd64_window`.
    #[serde(default)]
    pub firms_window: Option<DateWindow>,
    #[serde(default = "default_min_class")]
    pub min_class: SeverityClass,
    /// Relative area difference under which predicted and reference areas
    /// are reported as agreeing.
    #[serde(default = "default_area_tolerance")]
    pub area_tolerance: f64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn d(y: i32, m: u32, day: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, day).expect("valid date")
}

fn window(start: NaiveDate, end: NaiveDate) -> DateWindow {
    DateWindow::new(start, end).expect("valid default window")
}

pub fn default_roi() -> RoiPolygon {
    let (lon, lat) = ROMPIN_CENTER;
    let h = DEFAULT_ROI_HALF_DEG;
    RoiPolygon::rectangle(
        "EPSG:4326",
        Bounds {
            min_x: lon - h,
            min_y: lat - h,
            max_x: lon + h,
            max_y: lat + h,
        },
    )
    .expect("valid default ROI")
}

fn default_pre_window() -> DateWindow {
    window(d(2020, 2, 1), d(2021, 2, 1))
}

fn default_post_window() -> DateWindow {
    window(d(2021, 3, 1), d(2022, 3, 1))
}

fn default_mcd64_window() -> DateWindow {
    window(d(2021, 3, 1), d(2021, 4, 1))
}

fn default_max_cloud() -> Option<f64> {
    Some(25.0)
}

fn default_firms_radius() -> f64 {
    1_000.0
}

fn default_min_class() -> SeverityClass {
    SeverityClass::ModerateLowSeverity
}

fn default_area_tolerance() -> f64 {
    0.15
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl PipelineConfig {
    /// Config with every default filled in around the given inputs.
    pub fn with_inputs(manifests: Vec<PathBuf>, mcd64_path: PathBuf, firms_path: PathBuf) -> Self {
        PipelineConfig {
            schema: CONFIG_SCHEMA,
            roi: default_roi(),
            pre_window: default_pre_window(),
            post_window: default_post_window(),
            max_cloud: default_max_cloud(),
            manifests,
            sort_by_date: false,
            band_map: BandMap::default(),
            masking: Masking::Default,
            composite_method: CompositeMethod::Mosaic,
            thresholds: SeverityThresholds::default(),
            mcd64_path,
            mcd64_window: default_mcd64_window(),
            firms_path,
            firms_radius_m: default_firms_radius(),
            firms_window: None,
            min_class: default_min_class(),
            area_tolerance: default_area_tolerance(),
            output_dir: default_output_dir(),
        }
    }

    /// Parses and validates a config file.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: PipelineConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.schema != CONFIG_SCHEMA {
            return bad(format!(
                "unsupported config schema {} (expected {CONFIG_SCHEMA})",
                self.schema
            ));
        }
        if self.pre_window.end > self.post_window.start {
            return bad(format!(
                "pre_window {} must end before post_window {} starts",
                self.pre_window, self.post_window
            ));
        }
        if let Some(c) = self.max_cloud {
            if !(0.0..=100.0).contains(&c) {
                return bad(format!("max_cloud {c} outside 0..=100"));
            }
        }
        if self.manifests.is_empty() {
            return bad("at least one manifest is required".into());
        }
        if !(self.firms_radius_m.is_finite() && self.firms_radius_m >= 0.0) {
            return bad(format!(
                "firms_radius_m {} must be >= 0",
                self.firms_radius_m
            ));
        }
        if !(self.area_tolerance.is_finite() && self.area_tolerance > 0.0) {
            return bad(format!(
                "area_tolerance {} must be > 0",
                self.area_tolerance
            ));
        }
        self.masking.policies()?;
        Ok(())
    }

    /// Copy with relative paths resolved against `base`.
    pub fn resolved(&self, base: &Path) -> PipelineConfig {
        let abs = |p: &PathBuf| {
            if p.is_absolute() {
                p.clone()
            } else {
                base.join(p)
            }
        };
        PipelineConfig {
            manifests: self.manifests.iter().map(abs).collect(),
            mcd64_path: abs(&self.mcd64_path),
            firms_path: abs(&self.firms_path),
            output_dir: abs(&self.output_dir),
            ..self.clone()
        }
    }

    pub fn firms_window(&self) -> DateWindow {
        self.firms_window.unwrap_or(self.mcd64_window)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> &'static str {
        r#"{"schema": 1, "manifests": ["m.json"], "mcd64_path": "mcd.tif", "firms_path": "f.csv"}"#
    }

    #[test]
    fn defaults_fill_in() {
        let cfg: PipelineConfig = serde_json::from_str(minimal()).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.max_cloud, Some(25.0));
        assert_eq!(cfg.min_class, SeverityClass::ModerateLowSeverity);
        assert_eq!(cfg.mcd64_window.start, d(2021, 3, 1));
        assert!(cfg.roi.contains(103.2774, 2.9469));
        let again: PipelineConfig =
            serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn rejects_reversed_windows() {
        let mut cfg: PipelineConfig = serde_json::from_str(minimal()).unwrap();
        cfg.post_window = window(d(2019, 1, 1), d(2019, 6, 1));
        assert!(matches!(cfg.validate(), Err(CliError::Config(_))));
    }

    #[test]
    fn rejects_unknown_fields_and_schema() {
        let text = minimal().replace("\"schema\": 1", "\"schema\": 2");
        let cfg: PipelineConfig = serde_json::from_str(&text).unwrap();
        assert!(cfg.validate().is_err());
        let text = minimal().replace("\"schema\": 1", "\"schema\": 1, \"typo\": 3");
        assert!(serde_json::from_str::<PipelineConfig>(&text).is_err());
    }

    #[test]
    fn custom_masking_parses() {
        let text = minimal().replace(
            "\"schema\": 1",
            r#""schema": 1, "masking": {"custom": {"Landsat8TOA": {"qa_bits": [3]}}}"#,
        );
        let cfg: PipelineConfig = serde_json::from_str(&text).unwrap();
        let p = cfg.masking.policies().unwrap();
        assert_eq!(p[&Sensor::Landsat8TOA].rule, MaskRule::QaBits([3].into()));
        assert_eq!(
            p[&Sensor::Sentinel2L2A],
            MaskPolicy::default_for(Sensor::Sentinel2L2A)
        );
        let none: PipelineConfig = serde_json::from_str(
            &minimal().replace("\"schema\": 1", r#""schema": 1, "masking": "none""#),
        )
        .unwrap();
        assert!(none
            .masking
            .policies()
            .unwrap()
            .values()
            .all(|p| p.is_none()));
    }
}
