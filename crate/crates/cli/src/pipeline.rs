//! The end-to-end `run` workflow.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use burnscan_core::assessment::{assess, PredictionRule};
use burnscan_core::catalog::{
    default_registry, filter_scenes, load_manifest, select_burnt_area_product, sort_by_date,
    DateWindow, SceneMeta,
};
use burnscan_core::geotiff::{read_grid, write_geotiff};
use burnscan_core::preprocess::{analysis_grid, build_composite, Composite, CompositeRequest};
use burnscan_core::raster::{clip, resample_to, Executor, Grid, ResampleMethod};
use burnscan_core::reference::{
    burned_mask, load_firms_csv, rasterize_hotspots, split_by_year, BurnDateGrid,
};
use burnscan_core::severity::{burned_area, classify, dnbr, nbr, pixel_hectares, BandPair};
use log::{info, warn};

use crate::config::PipelineConfig;
use crate::error::CliError;
use crate::quicklook::{overlay_rgba, write_png, write_severity_png, OverlayLayers};
use crate::report::{AnalysisInfo, Areas, RunReport, SceneUse, Scenes, REPORT_SCHEMA};

const BANDS: [&str; 2] = ["nir", "swir2"];

struct Stopwatch {
    timings: BTreeMap<String, u64>,
    last: Instant,
}

impl Stopwatch {
    fn new() -> Self {
        Stopwatch {
            timings: BTreeMap::new(),
            last: Instant::now(),
        }
    }

    fn lap(&mut self, stage: &str) {
        let ms = self.last.elapsed().as_millis() as u64;
        info!("{stage}: {ms} ms");
        self.timings.insert(stage.to_string(), ms);
        self.last = Instant::now();
    }
}

/// Loads `config_path`, runs the workflow and writes all artifacts plus
/// `report.json` into the configured output directory.
pub fn run(config_path: &Path, exec: &Executor) -> Result<RunReport, CliError> {
    let cfg = PipelineConfig::load(config_path)?;
    let base = config_path.parent().unwrap_or(Path::new(""));
    run_config(&cfg, base, exec)
}

/// Runs a validated config whose relative paths are anchored at `base`.
pub fn run_config(
    cfg: &PipelineConfig,
    base: &Path,
    exec: &Executor,
) -> Result<RunReport, CliError> {
    let paths = cfg.resolved(base);
    let out_dir = &paths.output_dir;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", out_dir.display())))?;
    let mut clock = Stopwatch::new();
    let mut warnings = Vec::new();

    let mut scenes: Vec<SceneMeta> = Vec::new();
    for m in &paths.manifests {
        scenes.extend(load_manifest(m)?);
    }
    if cfg.sort_by_date {
        sort_by_date(&mut scenes);
    }
    let roi = &cfg.roi;
    let pre_sel = filter_scenes(&scenes, &cfg.pre_window, cfg.max_cloud, Some(roi));
    let post_sel = filter_scenes(&scenes, &cfg.post_window, cfg.max_cloud, Some(roi));
    for (sel, w) in [(&pre_sel, &cfg.pre_window), (&post_sel, &cfg.post_window)] {
        if sel.is_empty() {
            return Err(CliError::Empty(format!(
                "no scenes survive filtering for window {w}"
            )));
        }
    }
    let bands: Vec<String> = BANDS.iter().map(|b| b.to_string()).collect();
    let union: Vec<SceneMeta> = pre_sel.iter().chain(&post_sel).cloned().collect();
    let analysis = analysis_grid(&union, &bands, &cfg.band_map, roi)?;
    clock.lap("catalog");

    let policies = cfg.masking.policies()?;
    let request = |window: DateWindow| CompositeRequest {
        window,
        max_cloud: cfg.max_cloud,
        roi,
        bands: bands.clone(),
        band_map: &cfg.band_map,
        policies: &policies,
        method: cfg.composite_method,
        analysis: Some(&analysis),
    };
    let pre = build_composite(&scenes, &request(cfg.pre_window), exec)?;
    let post = build_composite(&scenes, &request(cfg.post_window), exec)?;
    warnings.extend(pre.warnings.iter().cloned());
    warnings.extend(post.warnings.iter().cloned());
    clock.lap("composite");

    let nbr_of = |c: &Composite| {
        nbr(
            BandPair {
                nir: &c.bands["nir"],
                swir2: &c.bands["swir2"],
            },
            exec,
        )
    };
    let nbr_pre = nbr_of(&pre)?;
    let nbr_post = nbr_of(&post)?;
    let delta = dnbr(&nbr_pre, &nbr_post, exec)?;
    let valid = delta.valid_count();
    if valid == 0 {
        return Err(CliError::Empty(
            "dNBR has no valid pixels; every observation in a window is masked".into(),
        ));
    }
    let missing = 1.0 - valid as f64 / delta.len() as f64;
    let severity = classify(&delta, &cfg.thresholds, exec)?;
    clock.lap("severity");

    let reference_product = match select_burnt_area_product(&default_registry(), &cfg.mcd64_window)
    {
        Ok(p) => Some(p.name),
        Err(e) => {
            warnings.push(e.to_string());
            None
        }
    };
    let dates = BurnDateGrid::new(read_grid(&paths.mcd64_path)?)?;
    let coarse = burned_mask(&dates, &split_by_year(&cfg.mcd64_window), exec)?;
    let on_lattice = |g: &Grid| -> Result<Grid, CliError> {
        let r = resample_to(
            g,
            severity.transform(),
            severity.width(),
            severity.height(),
            ResampleMethod::Nearest,
        )?;
        Ok(clip(&r, roi)?)
    };
    let reference = on_lattice(&coarse)?;
    let points = load_firms_csv(&paths.firms_path)?;
    let firms_window = cfg.firms_window();
    let hotspots = rasterize_hotspots(&points, &severity, cfg.firms_radius_m, Some(&firms_window))?;
    let hotspots = clip(&hotspots, roi)?;
    let in_window = points
        .iter()
        .filter(|p| firms_window.contains(p.acq_date))
        .count();
    if in_window == 0 {
        warnings.push(format!("no hotspots fall inside {firms_window}"));
    }
    clock.lap("reference");

    let agreement = assess(
        &severity,
        PredictionRule::MinClass(cfg.min_class),
        &reference,
        exec,
    )?;
    let pixel_ha = pixel_hectares(&severity)?;
    let ones = |g: &Grid| {
        g.values()
            .iter()
            .filter(|&&v| v == 1.0 && !g.is_nodata(v))
            .count()
    };
    let predicted = burned_area(&severity, cfg.min_class, exec)?;
    let reference_ha = ones(&reference) as f64 * pixel_ha;
    let relative = (reference_ha > 0.0).then(|| (predicted - reference_ha).abs() / reference_ha);
    let agree = relative.is_some_and(|r| r <= cfg.area_tolerance);
    if !agree {
        warnings.push(format!(
            "predicted area {predicted:.2} ha and reference area {reference_ha:.2} ha differ by more than {:.0} %",
            cfg.area_tolerance * 100.0
        ));
    }
    if missing > 0.05 {
        warnings.push(format!(
            "{:.1} % of analysis pixels have no valid dNBR",
            missing * 100.0
        ));
    }
    clock.lap("assessment");

    let outputs: [(&str, &Grid); 10] = [
        ("pre_nir.tif", &pre.bands["nir"]),
        ("pre_swir2.tif", &pre.bands["swir2"]),
        ("post_nir.tif", &post.bands["nir"]),
        ("post_swir2.tif", &post.bands["swir2"]),
        ("nbr_pre.tif", &nbr_pre),
        ("nbr_post.tif", &nbr_post),
        ("dnbr.tif", &delta),
        ("severity.tif", &severity),
        ("reference_mcd64.tif", &reference),
        ("reference_firms.tif", &hotspots),
    ];
    for (name, grid) in outputs {
        write_geotiff(out_dir.join(name), grid)?;
    }
    write_severity_png(&out_dir.join("severity.png"), &severity)?;
    let overlay = overlay_rgba(&OverlayLayers {
        nir: &post.bands["nir"],
        swir2: &post.bands["swir2"],
        burned: &reference,
        hotspots: &hotspots,
    })?;
    write_png(
        &out_dir.join("overlay.png"),
        severity.width(),
        severity.height(),
        &overlay,
    )?;
    clock.lap("write");

    for w in &warnings {
        warn!("{w}");
    }
    let report = RunReport {
        schema: REPORT_SCHEMA,
        config: cfg.clone(),
        reference_product,
        analysis_grid: AnalysisInfo {
            transform: analysis.transform.clone(),
            width: analysis.width,
            height: analysis.height,
            pixel_area_m2: pixel_ha * 10_000.0,
        },
        scenes: Scenes {
            pre: SceneUse {
                count: pre.scene_ids.len(),
                scene_ids: pre.scene_ids.clone(),
            },
            post: SceneUse {
                count: post.scene_ids.len(),
                scene_ids: post.scene_ids.clone(),
            },
        },
        area_ha: Areas {
            predicted,
            reference: reference_ha,
            hotspots: ones(&hotspots) as f64 * pixel_ha,
            relative_difference: relative,
            tolerance: cfg.area_tolerance,
            agree,
        },
        matrix: agreement.matrix,
        metrics: agreement.metrics,
        warnings,
        timings_ms: clock.timings,
    };
    let path = out_dir.join("report.json");
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    std::fs::write(&path, text + "\n")
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
    Ok(report)
}
