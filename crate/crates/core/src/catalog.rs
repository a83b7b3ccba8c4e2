//! Scene manifests, metadata filtering, burnt-area product selection and
//! band loading.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geotiff;
use crate::raster::{Bounds, Grid, GridKind, RoiPolygon};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sensor {
    Sentinel2L2A,
    Landsat8TOA,
    Other,
}

impl Sensor {
    /// Multiplier from stored integer samples to physical reflectance.
    pub fn default_scale(self) -> f64 {
        match self {
            Sensor::Sentinel2L2A => 1.0 / 10_000.0,
            Sensor::Landsat8TOA | Sensor::Other => 1.0,
        }
    }
}

impl fmt::Display for Sensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Half-open calendar window `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "WindowRepr")]
pub struct DateWindow {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

#[derive(Deserialize)]
struct WindowRepr {
    start: NaiveDate,
    end: NaiveDate,
}

impl TryFrom<WindowRepr> for DateWindow {
    type Error = Error;

    fn try_from(r: WindowRepr) -> Result<Self> {
        DateWindow::new(r.start, r.end)
    }
}

impl DateWindow {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self> {
        if start >= end {
            return Err(Error::InvalidWindow(format!(
                "start {start} must precede end {end}"
            )));
        }
        Ok(DateWindow { start, end })
    }

    pub fn unbounded() -> Self {
        DateWindow {
            start: NaiveDate::MIN,
            end: NaiveDate::MAX,
        }
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start <= date && date < self.end
    }

    /// Last day inside the window.
    pub fn last_day(&self) -> NaiveDate {
        self.end.pred_opt().unwrap_or(self.end)
    }
}

impl fmt::Display for DateWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.start, self.end)
    }
}

/// One catalog entry.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SceneMeta {
    pub scene_id: String,
    pub sensor: Sensor,
    pub acq_date: NaiveDate,
    pub cloud_percent: Option<f64>,
    pub bounds: Bounds,
    pub crs: String,
    /// Multiplier applied to integer reflectance samples.
    pub scale: f64,
    /// Band name to file path; relative manifest paths are already resolved.
    pub bands: BTreeMap<String, PathBuf>,
}

impl SceneMeta {
    pub fn validate(&self) -> Result<()> {
        let invalid = |reason: String| Error::InvalidMeta {
            scene_id: self.scene_id.clone(),
            reason,
        };
        if self.scene_id.is_empty() {
            return Err(invalid("empty scene_id".into()));
        }
        if let Some(c) = self.cloud_percent {
            if !(0.0..=100.0).contains(&c) {
                return Err(invalid(format!("cloud_percent {c} outside 0..=100")));
            }
        }
        let b = &self.bounds;
        if !(b.min_x < b.max_x && b.min_y < b.max_y) {
            return Err(invalid(format!(
                "bounds [{}, {}, {}, {}] are empty",
                b.min_x, b.min_y, b.max_x, b.max_y
            )));
        }
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(invalid(format!("scale {} must be positive", self.scale)));
        }
        Ok(())
    }

    pub fn band_path(&self, band: &str) -> Result<&Path> {
        self.bands
            .get(band)
            .map(PathBuf::as_path)
            .ok_or_else(|| Error::MissingBand {
                scene_id: self.scene_id.clone(),
                band: band.to_string(),
            })
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestFile {
    crs: String,
    scenes: Vec<SceneEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SceneEntry {
    scene_id: String,
    sensor: Sensor,
    acq_date: NaiveDate,
    cloud_percent: Option<f64>,
    bounds: [f64; 4],
    #[serde(default)]
    scale: Option<f64>,
    bands: BTreeMap<String, String>,
}

/// Reads a scene manifest. Entry order is preserved.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<Vec<SceneMeta>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: ManifestFile = serde_json::from_str(&text).map_err(|e| Error::parse(path, e))?;
    let base = path.parent().unwrap_or(Path::new(""));
    file.scenes
        .into_iter()
        .map(|e| {
            let meta = SceneMeta {
                scale: e.scale.unwrap_or(e.sensor.default_scale()),
                scene_id: e.scene_id,
                sensor: e.sensor,
                acq_date: e.acq_date,
                cloud_percent: e.cloud_percent,
                bounds: Bounds {
                    min_x: e.bounds[0],
                    min_y: e.bounds[1],
                    max_x: e.bounds[2],
                    max_y: e.bounds[3],
                },
                crs: file.crs.clone(),
                bands: e
                    .bands
                    .into_iter()
                    .map(|(name, p)| (name, base.join(p)))
                    .collect(),
            };
            meta.validate()?;
            Ok(meta)
        })
        .collect()
}

/// Writes a manifest for `scenes` (all in `crs`). Band paths under the
/// manifest's directory are stored relative to it.
pub fn save_manifest(path: impl AsRef<Path>, crs: &str, scenes: &[SceneMeta]) -> Result<()> {
    let path = path.as_ref();
    let base = path.parent().unwrap_or(Path::new(""));
    let entries = scenes
        .iter()
        .map(|s| SceneEntry {
            scene_id: s.scene_id.clone(),
            sensor: s.sensor,
            acq_date: s.acq_date,
            cloud_percent: s.cloud_percent,
            bounds: [
                s.bounds.min_x,
                s.bounds.min_y,
                s.bounds.max_x,
                s.bounds.max_y,
            ],
            scale: Some(s.scale),
            bands: s
                .bands
                .iter()
                .map(|(k, p)| {
                    let rel = p.strip_prefix(base).unwrap_or(p);
                    (k.clone(), rel.to_string_lossy().into_owned())
                })
                .collect(),
        })
        .collect();
    let file = ManifestFile {
        crs: crs.to_string(),
        scenes: entries,
    };
    let text = serde_json::to_string_pretty(&file).expect("manifest serializes");
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Keeps scenes acquired inside `window`, with cloud cover strictly below
/// `max_cloud` (scenes without cloud metadata pass), whose bounds touch the
/// ROI bounding box. Relative order is preserved.
pub fn filter_scenes(
    scenes: &[SceneMeta],
    window: &DateWindow,
    max_cloud: Option<f64>,
    roi: Option<&RoiPolygon>,
) -> Vec<SceneMeta> {
    let roi_box = roi.map(|r| (r.crs(), r.bbox()));
    scenes
        .iter()
        .filter(|s| window.contains(s.acq_date))
        .filter(|s| match (max_cloud, s.cloud_percent) {
            (Some(limit), Some(c)) => c < limit,
            _ => true,
        })
        .filter(|s| match &roi_box {
            Some((crs, b)) => {
                if *crs != s.crs {
                    log::warn!(
                        "scene {} is in {} but the ROI is in {}; skipping",
                        s.scene_id,
                        s.crs,
                        crs
                    );
                    return false;
                }
                s.bounds.intersects(b)
            }
            None => true,
        })
        .cloned()
        .collect()
}

/// Stable sort by acquisition date.
pub fn sort_by_date(scenes: &mut [SceneMeta]) {
    scenes.sort_by_key(|s| s.acq_date);
}

/// Ground resolution of a burnt-area product.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Resolution {
    Meters(f64),
    Vector(VectorTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VectorTag {
    Vector,
}

/// Catalog entry for a burnt-area product; coverage dates are inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductMeta {
    pub name: String,
    pub temporal_start: NaiveDate,
    pub temporal_end: NaiveDate,
    pub resolution_m: Resolution,
}

impl ProductMeta {
    /// Whether every day of `window` falls inside the product's coverage.
    pub fn covers(&self, window: &DateWindow) -> bool {
        self.temporal_start <= window.start && window.last_day() <= self.temporal_end
    }
}

/// The three burnt-area products available on the original platform.
pub fn default_registry() -> Vec<ProductMeta> {
    let d = |y, m, day| NaiveDate::from_ymd_opt(y, m, day).expect("valid date");
    vec![
        ProductMeta {
            name: "FireCCI51 v5.1".into(),
            temporal_start: d(2001, 1, 1),
            temporal_end: d(2020, 12, 1),
            resolution_m: Resolution::Meters(250.0),
        },
        ProductMeta {
            name: "Globfire Fire Event".into(),
            temporal_start: d(2001, 1, 1),
            temporal_end: d(2021, 1, 1),
            resolution_m: Resolution::Vector(VectorTag::Vector),
        },
        ProductMeta {
            name: "MCD64A1.061".into(),
            temporal_start: d(2000, 11, 1),
            temporal_end: d(2022, 12, 1),
            resolution_m: Resolution::Meters(500.0),
        },
    ]
}

pub fn load_registry(path: impl AsRef<Path>) -> Result<Vec<ProductMeta>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let products: Vec<ProductMeta> =
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e))?;
    for p in &products {
        if p.temporal_start > p.temporal_end {
            return Err(Error::parse(
                path,
                format!("product `{}` ends before it starts", p.name),
            ));
        }
    }
    Ok(products)
}

/// First product, in registry order, whose coverage contains `fire_window`.
pub fn select_burnt_area_product(
    products: &[ProductMeta],
    fire_window: &DateWindow,
) -> Result<ProductMeta> {
    products
        .iter()
        .find(|p| p.covers(fire_window))
        .cloned()
        .ok_or_else(|| Error::NoSuitableProduct(fire_window.to_string()))
}

/// Loads a reflectance band, scaling integer samples by the scene's scale.
pub fn load_band(scene: &SceneMeta, band: &str) -> Result<Grid> {
    load_band_as(scene, band, GridKind::Reflectance)
}

/// Loads a band as `kind`. Only reflectance bands are scaled; QA and other
/// integer bands keep their raw codes.
pub fn load_band_as(scene: &SceneMeta, band: &str, kind: GridKind) -> Result<Grid> {
    let path = scene.band_path(band)?;
    let raw = geotiff::read_raw(path)?;
    let scale = if kind == GridKind::Reflectance {
        scene.scale
    } else {
        1.0
    };
    raw.into_grid(kind, scale)
        .map_err(|e| Error::UnsupportedTiff {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
}

/// Adds `days` to `date`, saturating at the calendar limits.
pub fn add_days(date: NaiveDate, days: u64) -> NaiveDate {
    date.checked_add_days(Days::new(days))
        .unwrap_or(NaiveDate::MAX)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    fn scene(id: &str, date: &str, cloud: Option<f64>) -> SceneMeta {
        SceneMeta {
            scene_id: id.into(),
            sensor: Sensor::Sentinel2L2A,
            acq_date: d(date),
            cloud_percent: cloud,
            bounds: Bounds {
                min_x: 0.0,
                min_y: 0.0,
                max_x: 10.0,
                max_y: 10.0,
            },
            crs: "EPSG:32648".into(),
            scale: 1e-4,
            bands: BTreeMap::new(),
        }
    }

    #[test]
    fn cloud_filter_is_strict() {
        let scenes: Vec<_> = [10.0, 24.9, 25.0, 30.0]
            .iter()
            .enumerate()
            .map(|(i, &c)| scene(&format!("s{i}"), "2021-03-05", Some(c)))
            .collect();
        let kept = filter_scenes(&scenes, &DateWindow::unbounded(), Some(25.0), None);
        let clouds: Vec<_> = kept.iter().map(|s| s.cloud_percent.unwrap()).collect();
        assert_eq!(clouds, vec![10.0, 24.9]);
    }

    #[test]
    fn missing_cloud_metadata_passes() {
        let scenes = vec![scene("l8", "2021-03-05", None)];
        assert_eq!(
            filter_scenes(&scenes, &DateWindow::unbounded(), Some(25.0), None).len(),
            1
        );
    }

    #[test]
    fn window_edges_are_half_open() {
        let scenes = vec![
            scene("a", "2021-02-28", None),
            scene("b", "2021-03-01", None),
            scene("c", "2022-03-01", None),
        ];
        let w = DateWindow::new(d("2021-03-01"), d("2022-03-01")).unwrap();
        let kept = filter_scenes(&scenes, &w, None, None);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].scene_id, "b");
    }

    #[test]
    fn roi_filter_uses_bbox_and_crs() {
        let mut far = scene("far", "2021-03-05", None);
        far.bounds = Bounds {
            min_x: 100.0,
            min_y: 100.0,
            max_x: 110.0,
            max_y: 110.0,
        };
        let scenes = vec![scene("near", "2021-03-05", None), far];
        let roi = RoiPolygon::new("EPSG:32648", vec![(1.0, 1.0), (5.0, 1.0), (3.0, 4.0)]).unwrap();
        let kept = filter_scenes(&scenes, &DateWindow::unbounded(), None, Some(&roi));
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].scene_id, "near");
        let other = RoiPolygon::new("EPSG:4326", vec![(1.0, 1.0), (5.0, 1.0), (3.0, 4.0)]).unwrap();
        assert!(filter_scenes(&scenes, &DateWindow::unbounded(), None, Some(&other)).is_empty());
    }

    #[test]
    fn windows_reject_empty_ranges() {
        assert!(DateWindow::new(d("2021-03-01"), d("2021-03-01")).is_err());
        assert!(
            serde_json::from_str::<DateWindow>(r#"{"start":"2021-04-01","end":"2021-03-01"}"#)
                .is_err()
        );
    }

    #[test]
    fn table_one_selection() {
        let reg = default_registry();
        let march = DateWindow::new(d("2021-03-01"), d("2021-04-01")).unwrap();
        assert_eq!(
            select_burnt_area_product(&reg, &march).unwrap().name,
            "MCD64A1.061"
        );
        let june20 = DateWindow::new(d("2020-06-01"), d("2020-07-01")).unwrap();
        assert_eq!(
            select_burnt_area_product(&reg, &june20).unwrap().name,
            "FireCCI51 v5.1"
        );
        let june23 = DateWindow::new(d("2023-06-01"), d("2023-07-01")).unwrap();
        assert!(matches!(
            select_burnt_area_product(&reg, &june23),
            Err(Error::NoSuitableProduct(_))
        ));
    }

    #[test]
    fn registry_json_accepts_vector_resolution() {
        let json = serde_json::to_string(&default_registry()).unwrap();
        assert!(json.contains("\"resolution_m\":\"vector\""));
        let back: Vec<ProductMeta> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, default_registry());
    }
}
