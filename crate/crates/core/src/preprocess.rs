//! Cloud masking and multi-scene compositing onto a common analysis grid.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::catalog::{self, DateWindow, SceneMeta, Sensor};
use crate::error::{Error, Result};
use crate::geotiff;
use crate::raster::{
    clip, resample_to, snap_to_roi, Executor, GeoTransform, Grid, GridKind, ResampleMethod,
    RoiPolygon,
};

/// Which QA samples mark a pixel as unusable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskRule {
    /// Sentinel-2 L2A scene-classification codes.
    SclClasses(BTreeSet<u8>),
    /// Bit positions of a QA bitmask; any set bit masks the pixel.
    QaBits(BTreeSet<u8>),
    None,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskPolicy {
    pub sensor: Sensor,
    pub rule: MaskRule,
}

impl MaskPolicy {
    pub fn new(sensor: Sensor, rule: MaskRule) -> Result<Self> {
        match &rule {
            MaskRule::SclClasses(codes) => {
                if let Some(c) = codes.iter().find(|&&c| c > 11) {
                    return Err(Error::InvalidPolicy(format!(
                        "SCL class {c} outside 0..=11"
                    )));
                }
            }
            MaskRule::QaBits(bits) => {
                if let Some(b) = bits.iter().find(|&&b| b > 15) {
                    return Err(Error::InvalidPolicy(format!("QA bit {b} outside 0..=15")));
                }
            }
            MaskRule::None => {}
        }
        Ok(MaskPolicy { sensor, rule })
    }

    /// Sentinel-2 L2A: cloud shadow (3), medium (8) and high (9) probability
    /// cloud, thin cirrus (10). Landsat-8: cirrus (2), cloud (3) and cloud
    /// shadow (4) bits. Anything else: no masking.
    pub fn default_for(sensor: Sensor) -> Self {
        let rule = match sensor {
            Sensor::Sentinel2L2A => MaskRule::SclClasses([3, 8, 9, 10].into()),
            Sensor::Landsat8TOA => MaskRule::QaBits([2, 3, 4].into()),
            Sensor::Other => MaskRule::None,
        };
        MaskPolicy { sensor, rule }
    }

    pub fn none(sensor: Sensor) -> Self {
        MaskPolicy {
            sensor,
            rule: MaskRule::None,
        }
    }

    pub fn is_none(&self) -> bool {
        self.rule == MaskRule::None
    }

    /// Whether a (non-nodata) QA sample masks its pixel.
    pub fn masks(&self, qa: f32) -> bool {
        if !(qa >= 0.0 && qa <= u16::MAX as f32) {
            return false;
        }
        let code = qa as u16;
        match &self.rule {
            MaskRule::SclClasses(codes) => code <= 255 && codes.contains(&(code as u8)),
            MaskRule::QaBits(bits) => bits.iter().any(|&b| code >> b & 1 == 1),
            MaskRule::None => false,
        }
    }
}

/// Sets `band` pixels to nodata wherever `qa` is masked by `policy`.
pub fn apply_mask(band: &Grid, qa: &Grid, policy: &MaskPolicy, exec: &Executor) -> Result<Grid> {
    Grid::ensure_aligned(&[band, qa])?;
    if policy.is_none() {
        return Ok(band.clone());
    }
    let nodata = band.nodata();
    exec.map_tiled(&[band, qa], band.kind(), nodata, |s| {
        if !qa.is_nodata(s[1]) && policy.masks(s[1]) {
            nodata
        } else {
            s[0]
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompositeMethod {
    /// Last unmasked observation in stack order wins.
    #[default]
    Mosaic,
    /// Per-pixel median of unmasked observations.
    Median,
}

/// Reduces an ordered stack of aligned grids to one grid.
pub fn composite(stack: &[&Grid], method: CompositeMethod, exec: &Executor) -> Result<Grid> {
    let first = *stack.first().ok_or(Error::EmptyStack)?;
    let nodatas: Vec<f32> = stack.iter().map(|g| g.nodata()).collect();
    let out_nodata = first.nodata();
    let valid = |i: usize, v: f32| !(v == nodatas[i] || (v.is_nan() && nodatas[i].is_nan()));
    match method {
        CompositeMethod::Mosaic => exec.map_tiled(stack, first.kind(), out_nodata, |s| {
            s.iter()
                .enumerate()
                .rev()
                .find(|&(i, &v)| valid(i, v))
                .map_or(out_nodata, |(_, &v)| v)
        }),
        CompositeMethod::Median => exec.map_tiled(stack, first.kind(), out_nodata, |s| {
            let mut vals: Vec<f32> = s
                .iter()
                .enumerate()
                .filter(|&(i, &v)| valid(i, v))
                .map(|(_, &v)| v)
                .collect();
            median(&mut vals).unwrap_or(out_nodata)
        }),
    }
}

fn median(vals: &mut [f32]) -> Option<f32> {
    if vals.is_empty() {
        return None;
    }
    vals.sort_by(f32::total_cmp);
    let n = vals.len();
    Some(if n % 2 == 1 {
        vals[n / 2]
    } else {
        ((vals[n / 2 - 1] as f64 + vals[n / 2] as f64) / 2.0) as f32
    })
}

/// Physical band names of one sensor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensorBands {
    pub nir: String,
    pub swir2: String,
    #[serde(default)]
    pub qa: Option<String>,
}

/// Logical-to-physical band naming per sensor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BandMap(pub BTreeMap<Sensor, SensorBands>);

impl Default for BandMap {
    fn default() -> Self {
        let entry = |nir: &str, swir2: &str, qa: Option<&str>| SensorBands {
            nir: nir.into(),
            swir2: swir2.into(),
            qa: qa.map(Into::into),
        };
        BandMap(BTreeMap::from([
            (Sensor::Sentinel2L2A, entry("B8", "B12", Some("SCL"))),
            (Sensor::Landsat8TOA, entry("B5", "B7", Some("QA_PIXEL"))),
            (Sensor::Other, entry("NIR", "SWIR2", None)),
        ]))
    }
}

impl BandMap {
    /// Physical name of `logical` ("nir", "swir2" or "qa") for `sensor`;
    /// other names pass through unchanged.
    pub fn resolve(&self, sensor: Sensor, logical: &str) -> Option<String> {
        let Some(bands) = self.0.get(&sensor) else {
            return (logical != "qa").then(|| logical.to_string());
        };
        match logical {
            "nir" => Some(bands.nir.clone()),
            "swir2" => Some(bands.swir2.clone()),
            "qa" => bands.qa.clone(),
            other => Some(other.to_string()),
        }
    }
}

/// Target lattice shared by every composite of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisGrid {
    pub transform: GeoTransform,
    pub width: usize,
    pub height: usize,
}

/// Finest-resolution lattice among the requested bands of `scenes`, snapped
/// outward to the ROI bounding box. Reads file headers only.
pub fn analysis_grid(
    scenes: &[SceneMeta],
    bands: &[String],
    band_map: &BandMap,
    roi: &RoiPolygon,
) -> Result<AnalysisGrid> {
    let mut finest: Option<GeoTransform> = None;
    for scene in scenes {
        for logical in bands {
            let Some(name) = band_map.resolve(scene.sensor, logical) else {
                continue;
            };
            let info = geotiff::read_info(scene.band_path(&name)?)?;
            info.transform.ensure_same_crs(roi.crs())?;
            let t = info.transform;
            let finer = finest
                .as_ref()
                .is_none_or(|f| t.pixel_w * t.pixel_h < f.pixel_w * f.pixel_h);
            if finer {
                finest = Some(t);
            }
        }
    }
    let finest = finest.ok_or_else(|| Error::NoScenesInWindow("no bands to composite".into()))?;
    let (transform, width, height) = snap_to_roi(&finest, roi);
    Ok(AnalysisGrid {
        transform,
        width,
        height,
    })
}

/// Everything a per-window composite needs besides the scenes.
#[derive(Debug, Clone)]
pub struct CompositeRequest<'a> {
    pub window: DateWindow,
    pub max_cloud: Option<f64>,
    pub roi: &'a RoiPolygon,
    /// Logical band names (see [`BandMap::resolve`]).
    pub bands: Vec<String>,
    pub band_map: &'a BandMap,
    /// Per-sensor masking; sensors without an entry use the default policy.
    pub policies: &'a BTreeMap<Sensor, MaskPolicy>,
    pub method: CompositeMethod,
    /// Shared lattice; computed from the surviving scenes when absent.
    pub analysis: Option<&'a AnalysisGrid>,
}

#[derive(Debug, Clone)]
pub struct Composite {
    pub bands: BTreeMap<String, Grid>,
    /// Scene ids that entered the composite, in stack order.
    pub scene_ids: Vec<String>,
    pub analysis: AnalysisGrid,
    pub warnings: Vec<String>,
}

/// Filters, loads, aligns, masks, composites and clips each requested band.
pub fn build_composite(
    scenes: &[SceneMeta],
    req: &CompositeRequest<'_>,
    exec: &Executor,
) -> Result<Composite> {
    let selected = catalog::filter_scenes(scenes, &req.window, req.max_cloud, Some(req.roi));
    if selected.is_empty() {
        return Err(Error::NoScenesInWindow(req.window.to_string()));
    }
    let analysis = match req.analysis {
        Some(a) => a.clone(),
        None => analysis_grid(&selected, &req.bands, req.band_map, req.roi)?,
    };
    let mut warnings = Vec::new();

    let policy_for = |sensor: Sensor| {
        req.policies
            .get(&sensor)
            .cloned()
            .unwrap_or_else(|| MaskPolicy::default_for(sensor))
    };

    // QA grids on the analysis lattice, one per scene (None = no masking).
    let qa_grids: Vec<Result<Option<Grid>>> = exec.par_map(&selected, |scene| {
        let policy = policy_for(scene.sensor);
        if policy.is_none() {
            return Ok(None);
        }
        let Some(name) = req.band_map.resolve(scene.sensor, "qa") else {
            return Ok(None);
        };
        if !scene.bands.contains_key(&name) {
            return Ok(None);
        }
        let qa = catalog::load_band_as(scene, &name, GridKind::Categorical)?;
        let qa = resample_to(
            &qa,
            &analysis.transform,
            analysis.width,
            analysis.height,
            ResampleMethod::Nearest,
        )?;
        Ok(Some(qa))
    });
    let qa_grids: Vec<Option<Grid>> = qa_grids.into_iter().collect::<Result<_>>()?;
    for (scene, qa) in selected.iter().zip(&qa_grids) {
        // Landsat 8-day composites routinely ship without QA; only warn for
        // sensors that are expected to carry one.
        let qa_expected = scene.sensor != Sensor::Landsat8TOA;
        if qa.is_none() && qa_expected && !policy_for(scene.sensor).is_none() {
            warnings.push(format!(
                "scene {} has no QA band; composited without cloud masking",
                scene.scene_id
            ));
        }
    }

    let mut out = BTreeMap::new();
    for logical in &req.bands {
        let layers: Vec<Result<Grid>> = exec.par_map(&selected, |scene| {
            let name =
                req.band_map
                    .resolve(scene.sensor, logical)
                    .ok_or_else(|| Error::MissingBand {
                        scene_id: scene.scene_id.clone(),
                        band: logical.clone(),
                    })?;
            let band = catalog::load_band(scene, &name)?;
            resample_to(
                &band,
                &analysis.transform,
                analysis.width,
                analysis.height,
                ResampleMethod::Bilinear,
            )
        });
        let mut stack = Vec::with_capacity(layers.len());
        for ((layer, qa), scene) in layers.into_iter().zip(&qa_grids).zip(&selected) {
            let layer = layer?;
            let layer = match qa {
                Some(qa) => apply_mask(&layer, qa, &policy_for(scene.sensor), exec)?,
                None => layer,
            };
            stack.push(layer);
        }
        let refs: Vec<&Grid> = stack.iter().collect();
        let merged = composite(&refs, req.method, exec)?;
        drop(stack);
        out.insert(logical.clone(), clip(&merged, req.roi)?);
    }

    Ok(Composite {
        bands: out,
        scene_ids: selected.iter().map(|s| s.scene_id.clone()).collect(),
        analysis,
        warnings,
    })
}
