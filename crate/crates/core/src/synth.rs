//! Seeded synthetic scenes with known ground truth.
//!
//! A generated bundle holds pre- and post-fire Sentinel-2 style scenes
//! (NIR, SWIR2 and SCL bands), the rasterized burn polygon, a 500 m
//! burn-date grid and a hotspot CSV derived from the same polygon. All
//! randomness comes from ChaCha8 streams keyed by the `SynthSpec` seed, so
//! a given spec always produces the same bytes.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::assessment::{confusion_by, metrics, PredictionRule};
use crate::catalog::{add_days, save_manifest, SceneMeta, Sensor};
use crate::crs::{crs_units, CrsUnits, GroundScale};
use crate::error::{Error, Result};
use crate::geotiff::write_geotiff;
use crate::preprocess::AnalysisGrid;
use crate::raster::{Executor, GeoTransform, Grid, GridKind, RoiPolygon, INT_NODATA};
use crate::severity::{pixel_hectares, SeverityThresholds};

/// Longitude and latitude of the default scene center.
pub const ROMPIN_CENTER: (f64, f64) = (103.2774, 2.9469);

/// Scene-classification codes written to the synthetic SCL band.
pub const SCL_CLEAR: f32 = 4.0;
pub const SCL_CLOUD: f32 = 9.0;

const DN_SCALE: f64 = 10_000.0;

/// Burn polygon vertices in meters east/north of the grid center. About
/// 352 ha, with exactly 14 cell centers of the 500 m lattice inside.
const BURN_RING_M: [(f64, f64); 7] = [
    (-1035.0, -725.0),
    (205.0, -1035.0),
    (1125.0, -525.0),
    (1025.0, 405.0),
    (305.0, 1025.0),
    (-725.0, 815.0),
    (-1185.0, 95.0),
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReflectanceModel {
    pub pre_nir: f64,
    pub pre_swir2: f64,
    /// Post-fire means inside the burn polygon; outside, pre-fire means hold.
    pub post_nir: f64,
    pub post_swir2: f64,
    /// Gaussian noise sigma, truncated at three sigma.
    pub noise_sigma: f64,
    pub cloud_nir: f64,
    pub cloud_swir2: f64,
}

impl Default for ReflectanceModel {
    fn default() -> Self {
        ReflectanceModel {
            pre_nir: 0.30,
            pre_swir2: 0.08,
            post_nir: 0.12,
            post_swir2: 0.22,
            noise_sigma: 0.003,
            cloud_nir: 0.45,
            cloud_swir2: 0.33,
        }
    }
}

/// Which scenes receive clouds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CloudScenes {
    #[default]
    All,
    PostOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub seed: u64,
    pub grid: AnalysisGrid,
    pub burn_polygon: RoiPolygon,
    pub burn_year: i32,
    pub burn_doy: u16,
    pub n_pre_scenes: usize,
    pub n_post_scenes: usize,
    /// Fraction of eligible pixels covered by cloud in each cloudy scene.
    pub cloud_fraction: f64,
    /// Feature size of cloud blobs in pixels.
    pub cloud_blob_scale: f64,
    pub cloud_scenes: CloudScenes,
    /// Keep clouds off the burn polygon.
    pub clouds_avoid_burn: bool,
    pub reflectance: ReflectanceModel,
    /// Burn-date cell edge in analysis pixels.
    pub mcd_pixel_factor: usize,
    pub firms_points: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec::rompin(512)
    }
}

impl SynthSpec {
    /// Square `size`-pixel EPSG:4326 grid of 20 m pixels centered on the
    /// default location, with the default burn polygon.
    pub fn rompin(size: usize) -> Self {
        let (lon0, lat0) = ROMPIN_CENTER;
        let deg_x = 1.0 / (crate::crs::M_PER_DEG_LON * lat0.to_radians().cos());
        let deg_y = 1.0 / crate::crs::M_PER_DEG_LAT;
        let pixel_w = 20.0 * deg_x;
        let pixel_h = 20.0 * deg_y;
        let half = size as f64 / 2.0;
        let transform = GeoTransform {
            origin_x: lon0 - half * pixel_w,
            origin_y: lat0 + half * pixel_h,
            pixel_w,
            pixel_h,
            crs: "EPSG:4326".into(),
        };
        let ring = BURN_RING_M
            .iter()
            .map(|&(x, y)| (lon0 + x * deg_x, lat0 + y * deg_y))
            .collect();
        SynthSpec {
            seed: 20210315,
            grid: AnalysisGrid {
                transform,
                width: size,
                height: size,
            },
            burn_polygon: RoiPolygon::new("EPSG:4326", ring)
                .expect("default burn polygon is valid"),
            burn_year: 2021,
            burn_doy: 74,
            n_pre_scenes: 4,
            n_post_scenes: 4,
            cloud_fraction: 0.3,
            cloud_blob_scale: 48.0,
            cloud_scenes: CloudScenes::All,
            clouds_avoid_burn: false,
            reflectance: ReflectanceModel::default(),
            mcd_pixel_factor: 25,
            firms_points: 12,
        }
    }

    pub fn burn_date(&self) -> Result<NaiveDate> {
        NaiveDate::from_yo_opt(self.burn_year, self.burn_doy as u32).ok_or_else(|| {
            Error::InvalidSpec(format!(
                "day {} does not exist in {}",
                self.burn_doy, self.burn_year
            ))
        })
    }

    /// Grid extent as a rectangle, the natural ROI for a bundle.
    pub fn extent(&self) -> Result<RoiPolygon> {
        let b = self
            .grid
            .transform
            .bounds(self.grid.width, self.grid.height);
        RoiPolygon::rectangle(self.grid.transform.crs.clone(), b)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        let g = &self.grid;
        g.transform
            .validate()
            .map_err(|e| Error::InvalidSpec(e.to_string()))?;
        if g.width == 0 || g.height == 0 {
            return bad("grid must have at least one pixel".into());
        }
        if crs_units(&g.transform.crs).ok() != Some(CrsUnits::Degrees) {
            return bad(format!(
                "grid CRS {} must be geographic so hotspots can be written as lon/lat",
                g.transform.crs
            ));
        }
        if self.burn_polygon.crs() != g.transform.crs {
            return bad("burn polygon CRS differs from the grid CRS".into());
        }
        let gb = g.transform.bounds(g.width, g.height);
        let pb = self.burn_polygon.bbox();
        if pb.min_x < gb.min_x || pb.max_x > gb.max_x || pb.min_y < gb.min_y || pb.max_y > gb.max_y
        {
            return bad("burn polygon extends beyond the grid".into());
        }
        self.burn_date()?;
        if self.n_pre_scenes == 0 || self.n_post_scenes == 0 {
            return bad("need at least one pre- and one post-fire scene".into());
        }
        if !(0.0..=1.0).contains(&self.cloud_fraction) {
            return bad(format!(
                "cloud_fraction {} outside [0, 1]",
                self.cloud_fraction
            ));
        }
        if !(self.cloud_blob_scale.is_finite() && self.cloud_blob_scale >= 1.0) {
            return bad("cloud_blob_scale must be at least one pixel".into());
        }
        if self.mcd_pixel_factor == 0 {
            return bad("mcd_pixel_factor must be positive".into());
        }
        self.check_reflectance()
    }

    /// The reflectance model must separate burned from unburned pixels
    /// under worst-case noise.
    fn check_reflectance(&self) -> Result<()> {
        let m = &self.reflectance;
        let all = [
            m.pre_nir,
            m.pre_swir2,
            m.post_nir,
            m.post_swir2,
            m.cloud_nir,
            m.cloud_swir2,
        ];
        if all.iter().any(|v| !(v.is_finite() && *v > 0.0 && *v < 1.0)) {
            return Err(Error::InvalidSpec(
                "reflectance means must lie in (0, 1)".into(),
            ));
        }
        if !(m.noise_sigma.is_finite() && m.noise_sigma >= 0.0) {
            return Err(Error::InvalidSpec(
                "noise_sigma must be non-negative".into(),
            ));
        }
        // Three-sigma noise plus half a digital number of quantization.
        let e = 3.0 * m.noise_sigma + 0.5 / DN_SCALE;
        let nbr = |n: f64, s: f64| (n - s) / (n + s);
        let range = |n: f64, s: f64| (nbr(n - e, s + e), nbr(n + e, s - e));
        let (pre_lo, pre_hi) = range(m.pre_nir, m.pre_swir2);
        let (_, post_hi) = range(m.post_nir, m.post_swir2);
        let top = SeverityThresholds::default().values()[5];
        let mean_gap = nbr(m.pre_nir, m.pre_swir2) - nbr(m.post_nir, m.post_swir2);
        if mean_gap <= top {
            return Err(Error::InvalidSpec(format!(
                "mean burned dNBR {mean_gap:.3} must exceed {top}"
            )));
        }
        if pre_lo - post_hi < 0.44 {
            return Err(Error::InvalidSpec(format!(
                "worst-case burned dNBR {:.3} falls below 0.44",
                pre_lo - post_hi
            )));
        }
        if pre_hi - pre_lo >= 0.10 {
            return Err(Error::InvalidSpec(format!(
                "worst-case unburned |dNBR| {:.3} reaches 0.10",
                pre_hi - pre_lo
            )));
        }
        Ok(())
    }
}

/// Ground truth written next to a bundle as `truth.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub burn_date: NaiveDate,
    pub burned_pixels: u64,
    pub burned_area_ha: f64,
    pub pixel_area_m2: f64,
    pub mcd_burned_pixels: u64,
    pub mcd_burned_area_ha: f64,
    pub firms_points: usize,
    /// Cloudy pixel count per scene id.
    pub cloud_pixels: BTreeMap<String, u64>,
}

/// Paths of everything [`generate`] wrote.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthBundle {
    pub dir: PathBuf,
    pub pre_manifest: PathBuf,
    pub post_manifest: PathBuf,
    pub truth_mask: PathBuf,
    pub mcd64: PathBuf,
    pub firms_csv: PathBuf,
    pub truth_json: PathBuf,
    pub truth: Truth,
}

/// Writes a synthetic bundle for `spec` into `out_dir`.
pub fn generate(spec: &SynthSpec, out_dir: impl AsRef<Path>) -> Result<SynthBundle> {
    spec.validate()?;
    let dir = out_dir.as_ref().to_path_buf();
    let io = |p: &Path, e| Error::io(p, e);
    std::fs::create_dir_all(&dir).map_err(|e| io(&dir, e))?;

    let g = &spec.grid;
    let (w, h) = (g.width, g.height);
    let t = &g.transform;
    let burn_date = spec.burn_date()?;

    let truth = rasterize_polygon(&spec.burn_polygon, t, w, h);
    let truth_grid = Grid::new(
        w,
        h,
        t.clone(),
        INT_NODATA,
        truth.iter().map(|&b| b as u8 as f32).collect(),
        GridKind::Mask,
    )?;
    let truth_mask = dir.join("truth_mask.tif");
    write_geotiff(&truth_mask, &truth_grid)?;

    let mut cloud_pixels = BTreeMap::new();
    let mut scenes = |post: bool, n: usize| -> Result<Vec<SceneMeta>> {
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let (id, date, stream) = if post {
                let d = add_days(burn_date, 5 + 10 * i as u64);
                (format!("S2_POST_{i:02}"), d, 1_000 + i as u64)
            } else {
                let back = 60 + 30 * (n - 1 - i) as u64;
                let d = burn_date - chrono::Days::new(back);
                (format!("S2_PRE_{i:02}"), d, i as u64)
            };
            let cloudy = post || spec.cloud_scenes == CloudScenes::All;
            let clouds = if cloudy {
                cloud_mask(spec, &truth, stream)
            } else {
                vec![false; w * h]
            };
            let n_cloud = clouds.iter().filter(|&&c| c).count() as u64;
            cloud_pixels.insert(id.clone(), n_cloud);
            let meta = write_scene(spec, &dir, &id, date, post, &truth, &clouds, stream)?;
            out.push(meta);
        }
        Ok(out)
    };
    let pre = scenes(false, spec.n_pre_scenes)?;
    let post = scenes(true, spec.n_post_scenes)?;
    let pre_manifest = dir.join("pre_manifest.json");
    let post_manifest = dir.join("post_manifest.json");
    save_manifest(&pre_manifest, &t.crs, &pre)?;
    save_manifest(&post_manifest, &t.crs, &post)?;

    let mcd = burn_date_grid(spec)?;
    let mcd_burned = mcd.values().iter().filter(|&&v| v > 0.0).count() as u64;
    let mcd_ha = mcd_burned as f64 * pixel_hectares(&mcd)?;
    let mcd64 = dir.join("mcd64a1.tif");
    write_geotiff(&mcd64, &mcd)?;

    let points = hotspot_points(spec, &mcd)?;
    let firms_csv = dir.join("firms.csv");
    let mut wtr = csv::Writer::from_path(&firms_csv).map_err(|e| Error::parse(&firms_csv, e))?;
    let csv_err = |e: csv::Error| Error::parse(&firms_csv, e);
    wtr.write_record([
        "latitude",
        "longitude",
        "acq_date",
        "acq_time",
        "confidence",
    ])
    .map_err(csv_err)?;
    for (lon, lat) in &points {
        wtr.write_record([
            format!("{lat:.6}"),
            format!("{lon:.6}"),
            burn_date.to_string(),
            "0545".to_string(),
            "n".to_string(),
        ])
        .map_err(csv_err)?;
    }
    wtr.flush().map_err(|e| io(&firms_csv, e))?;

    let burned_pixels = truth.iter().filter(|&&b| b).count() as u64;
    let pixel_area_m2 = crate::crs::pixel_area_m2(t, h)?;
    let truth_info = Truth {
        burn_date,
        burned_pixels,
        burned_area_ha: burned_pixels as f64 * pixel_area_m2 / 10_000.0,
        pixel_area_m2,
        mcd_burned_pixels: mcd_burned,
        mcd_burned_area_ha: mcd_ha,
        firms_points: points.len(),
        cloud_pixels,
    };
    let truth_json = dir.join("truth.json");
    let text = serde_json::to_string_pretty(&truth_info).expect("truth serializes");
    std::fs::write(&truth_json, text + "\n").map_err(|e| io(&truth_json, e))?;

    Ok(SynthBundle {
        dir,
        pre_manifest,
        post_manifest,
        truth_mask,
        mcd64,
        firms_csv,
        truth_json,
        truth: truth_info,
    })
}

/// Pixel-center containment of `poly` on a lattice.
fn rasterize_polygon(poly: &RoiPolygon, t: &GeoTransform, w: usize, h: usize) -> Vec<bool> {
    let mut out = vec![false; w * h];
    let b = poly.bbox();
    for row in 0..h {
        let (_, y) = t.pixel_center(0, row as i64);
        if y < b.min_y || y > b.max_y {
            continue;
        }
        for col in 0..w {
            let (x, y) = t.pixel_center(col as i64, row as i64);
            out[row * w + col] = x >= b.min_x && x <= b.max_x && poly.contains(x, y);
        }
    }
    out
}

/// Lattice of the burn-date grid: `mcd_pixel_factor` analysis pixels per
/// cell, with a cell edge on the analysis grid's middle column and row.
fn burn_date_lattice(spec: &SynthSpec) -> (GeoTransform, usize, usize) {
    let g = &spec.grid;
    let t = &g.transform;
    let f = spec.mcd_pixel_factor;
    let (mid_c, mid_r) = (g.width / 2, g.height / 2);
    let kc = mid_c.max(g.width - mid_c).div_ceil(f);
    let kr = mid_r.max(g.height - mid_r).div_ceil(f);
    let transform = GeoTransform {
        origin_x: t.origin_x + (mid_c as f64 - (kc * f) as f64) * t.pixel_w,
        origin_y: t.origin_y - (mid_r as f64 - (kr * f) as f64) * t.pixel_h,
        pixel_w: t.pixel_w * f as f64,
        pixel_h: t.pixel_h * f as f64,
        crs: t.crs.clone(),
    };
    (transform, 2 * kc, 2 * kr)
}

fn burn_date_grid(spec: &SynthSpec) -> Result<Grid> {
    let (t, w, h) = burn_date_lattice(spec);
    let inside = rasterize_polygon(&spec.burn_polygon, &t, w, h);
    let doy = spec.burn_doy as f32;
    let values = inside.iter().map(|&b| if b { doy } else { 0.0 }).collect();
    Grid::new(w, h, t, INT_NODATA, values, GridKind::BurnDate)
}

/// Uniform points inside the burn polygon that also lie within 1 km of a
/// burned burn-date cell center.
fn hotspot_points(spec: &SynthSpec, mcd: &Grid) -> Result<Vec<(f64, f64)>> {
    let mut rng = Rng::new(spec.seed, 999_999);
    let poly = &spec.burn_polygon;
    let b = poly.bbox();
    let t = mcd.transform();
    let scale = GroundScale::for_grid(t, mcd.height())?;
    let mut centers = Vec::new();
    for row in 0..mcd.height() {
        for col in 0..mcd.width() {
            if mcd.get(col, row) > 0.0 {
                centers.push(t.pixel_center(col as i64, row as i64));
            }
        }
    }
    let near_burn = |x: f64, y: f64| {
        centers.iter().any(|&(cx, cy)| {
            let dx = (cx - x) * scale.x;
            let dy = (cy - y) * scale.y;
            dx * dx + dy * dy <= 1_000.0 * 1_000.0
        })
    };
    let mut out = Vec::with_capacity(spec.firms_points);
    let mut tries = 0usize;
    while out.len() < spec.firms_points {
        tries += 1;
        if tries > 1_000_000 {
            return Err(Error::InvalidSpec(
                "cannot place hotspots inside the burn polygon".into(),
            ));
        }
        let x = b.min_x + rng.uniform() * (b.max_x - b.min_x);
        let y = b.min_y + rng.uniform() * (b.max_y - b.min_y);
        // Round to the CSV precision first so the written point is tested.
        let (x, y) = (round6(x), round6(y));
        if poly.contains(x, y) && near_burn(x, y) {
            out.push((x, y));
        }
    }
    Ok(out)
}

fn round6(v: f64) -> f64 {
    (v * 1e6).round() / 1e6
}

/// Cloud mask from thresholded two-octave value noise. Exactly
/// `round(cloud_fraction * eligible)` pixels are cloudy.
fn cloud_mask(spec: &SynthSpec, truth: &[bool], stream: u64) -> Vec<bool> {
    let (w, h) = (spec.grid.width, spec.grid.height);
    let mut rng = Rng::new(spec.seed, stream * 4 + 1);
    let s = spec.cloud_blob_scale;
    let coarse = ValueNoise::new(&mut rng, w, h, s);
    let fine = ValueNoise::new(&mut rng, w, h, (s / 2.0).max(1.0));

    let mut field: Vec<(f64, u32)> = Vec::with_capacity(w * h);
    for row in 0..h {
        for col in 0..w {
            let i = row * w + col;
            if spec.clouds_avoid_burn && truth[i] {
                continue;
            }
            let v = coarse.at(col, row) + 0.5 * fine.at(col, row);
            field.push((v, i as u32));
        }
    }
    let k = (spec.cloud_fraction * field.len() as f64).round() as usize;
    let mut mask = vec![false; w * h];
    if k == 0 {
        return mask;
    }
    let k = k.min(field.len());
    let by_rank = |a: &(f64, u32), b: &(f64, u32)| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1));
    if k < field.len() {
        field.select_nth_unstable_by(k - 1, by_rank);
    }
    for &(_, i) in &field[..k] {
        mask[i as usize] = true;
    }
    mask
}

#[allow(clippy::too_many_arguments)]
fn write_scene(
    spec: &SynthSpec,
    dir: &Path,
    id: &str,
    date: NaiveDate,
    post: bool,
    truth: &[bool],
    clouds: &[bool],
    stream: u64,
) -> Result<SceneMeta> {
    let g = &spec.grid;
    let (w, h) = (g.width, g.height);
    let m = &spec.reflectance;
    let mut rng = Rng::new(spec.seed, stream * 4 + 2);
    let sigma = m.noise_sigma;
    let mut nir = Vec::with_capacity(w * h);
    let mut swir = Vec::with_capacity(w * h);
    let mut scl = Vec::with_capacity(w * h);
    for i in 0..w * h {
        let (n, s) = if clouds[i] {
            (m.cloud_nir, m.cloud_swir2)
        } else if post && truth[i] {
            (m.post_nir, m.post_swir2)
        } else {
            (m.pre_nir, m.pre_swir2)
        };
        nir.push(to_dn(n + sigma * rng.truncated_normal()));
        swir.push(to_dn(s + sigma * rng.truncated_normal()));
        scl.push(if clouds[i] { SCL_CLOUD } else { SCL_CLEAR });
    }

    let scene_dir = dir.join("scenes").join(id);
    std::fs::create_dir_all(&scene_dir).map_err(|e| Error::io(&scene_dir, e))?;
    let mut bands = BTreeMap::new();
    for (name, values) in [("B8", nir), ("B12", swir), ("SCL", scl)] {
        let grid = Grid::new(
            w,
            h,
            g.transform.clone(),
            0.0,
            values,
            GridKind::Categorical,
        )?;
        let path = scene_dir.join(format!("{name}.tif"));
        write_geotiff(&path, &grid)?;
        bands.insert(name.to_string(), path);
    }
    let n_cloud = clouds.iter().filter(|&&c| c).count();
    let cloud_percent = (10_000.0 * n_cloud as f64 / (w * h) as f64).round() / 100.0;
    Ok(SceneMeta {
        scene_id: id.to_string(),
        sensor: Sensor::Sentinel2L2A,
        acq_date: date,
        cloud_percent: Some(cloud_percent),
        bounds: g.transform.bounds(w, h),
        crs: g.transform.crs.clone(),
        scale: 1.0 / DN_SCALE,
        bands,
    })
}

/// Reflectance to a digital number in 1..=32767 (0 is nodata).
fn to_dn(r: f64) -> f32 {
    (r * DN_SCALE).round().clamp(1.0, i16::MAX as f64) as f32
}

/// Dice and area difference of a 0/1 result mask against the truth mask.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthComparison {
    pub dice: f64,
    pub result_ha: f64,
    pub truth_ha: f64,
    /// `result_ha - truth_ha`.
    pub area_delta_ha: f64,
    /// `|area_delta_ha| / truth_ha`; absent for an empty truth.
    pub relative_area_delta: Option<f64>,
}

/// Compares a burned mask (1 = burned) with the generator's truth mask.
pub fn truth_compare(result: &Grid, truth: &Grid) -> Result<TruthComparison> {
    Grid::ensure_aligned(&[result, truth])?;
    let exec = Executor::sequential();
    let m = confusion_by(result, PredictionRule::Mask, truth, &exec)?;
    let dice = metrics(&m)?.dice;
    let ha = pixel_hectares(truth)?;
    let ones = |g: &Grid| {
        g.values()
            .iter()
            .filter(|&&v| v == 1.0 && !g.is_nodata(v))
            .count()
    };
    let result_ha = ones(result) as f64 * ha;
    let truth_ha = ones(truth) as f64 * ha;
    let delta = result_ha - truth_ha;
    Ok(TruthComparison {
        dice,
        result_ha,
        truth_ha,
        area_delta_ha: delta,
        relative_area_delta: (truth_ha > 0.0).then(|| delta.abs() / truth_ha),
    })
}

/// Seeded ChaCha8 stream with uniform and truncated-normal draws.
struct Rng {
    inner: ChaCha8Rng,
    spare: Option<f64>,
}

impl Rng {
    fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Rng { inner, spare: None }
    }

    /// Uniform in [0, 1) with 53 random bits.
    fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Box-Muller standard normal.
    fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }

    /// Standard normal conditioned on |z| <= 3.
    fn truncated_normal(&mut self) -> f64 {
        loop {
            let z = self.normal();
            if z.abs() <= 3.0 {
                return z;
            }
        }
    }
}

/// Bilinear value noise with smoothstep easing on a square lattice.
struct ValueNoise {
    nodes: Vec<f64>,
    stride: usize,
    cell: f64,
}

impl ValueNoise {
    fn new(rng: &mut Rng, w: usize, h: usize, cell: f64) -> Self {
        let nx = (w as f64 / cell).ceil() as usize + 2;
        let ny = (h as f64 / cell).ceil() as usize + 2;
        let nodes = (0..nx * ny).map(|_| rng.uniform()).collect();
        ValueNoise {
            nodes,
            stride: nx,
            cell,
        }
    }

    fn at(&self, col: usize, row: usize) -> f64 {
        let fx = (col as f64 + 0.5) / self.cell;
        let fy = (row as f64 + 0.5) / self.cell;
        let (ix, iy) = (fx.floor() as usize, fy.floor() as usize);
        let ease = |t: f64| t * t * (3.0 - 2.0 * t);
        let (tx, ty) = (ease(fx.fract()), ease(fy.fract()));
        let n = |x: usize, y: usize| self.nodes[y * self.stride + x];
        let top = n(ix, iy) * (1.0 - tx) + n(ix + 1, iy) * tx;
        let bottom = n(ix, iy + 1) * (1.0 - tx) + n(ix + 1, iy + 1) * tx;
        top * (1.0 - ty) + bottom * ty
    }
}
