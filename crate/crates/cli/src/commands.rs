//! Command-line surface.

use std::path::{Path, PathBuf};

use burnscan_core::assessment::{assess, PredictionRule};
use burnscan_core::catalog::{
    default_registry, filter_scenes, load_manifest, load_registry, select_burnt_area_product,
    sort_by_date, DateWindow, SceneMeta,
};
use burnscan_core::geotiff::{read_grid, write_geotiff};
use burnscan_core::preprocess::{build_composite, BandMap, CompositeMethod, CompositeRequest};
use burnscan_core::raster::{resample_to, Executor, Grid, GridKind, ResampleMethod, RoiPolygon};
use burnscan_core::reference::{
    burned_mask, load_firms_csv, rasterize_hotspots, split_by_year, BurnDateGrid,
};
use burnscan_core::severity::{classify, dnbr, nbr, BandPair, SeverityClass, SeverityThresholds};
use burnscan_core::synth::{generate, SynthSpec};
use chrono::{Datelike, NaiveDate};
use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use serde::Serialize;

use crate::config::{Masking, PipelineConfig};
use crate::error::CliError;
use crate::pipeline;
use crate::quicklook::write_severity_png;
use crate::report::{AssessAreas, AssessReport, REPORT_SCHEMA};

#[derive(Debug, Parser)]
#[command(
    name = "burnscan",
    version,
    about = "Burn severity mapping and burned-area assessment"
)]
pub struct Cli {
    /// Worker threads for raster operations (default: available cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Only log errors.
    #[arg(short, long, global = true)]
    pub quiet: bool,
    /// More log output; repeat for debug.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the full workflow from a config file and write report.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's output directory.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// List scenes passing the filters and the burnt-area product for a window.
    Catalog {
        #[command(flatten)]
        scenes: SceneArgs,
        /// Product registry JSON (default: built-in registry).
        #[arg(long)]
        registry: Option<PathBuf>,
    },
    /// Build a masked composite of the selected scenes.
    Composite {
        #[command(flatten)]
        scenes: SceneArgs,
        /// ROI polygon JSON (`{"crs": ..., "ring": [[x, y], ...]}`).
        #[arg(long)]
        roi: PathBuf,
        /// Logical or physical band names.
        #[arg(long = "band", default_values = ["nir", "swir2"])]
        bands: Vec<String>,
        #[arg(long, value_enum, default_value = "mosaic")]
        method: MethodArg,
        /// Disable QA masking.
        #[arg(long)]
        no_mask: bool,
        /// Directory receiving one `<band>.tif` per band.
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Normalized burn ratio from NIR and SWIR2 rasters.
    Nbr {
        #[arg(long)]
        nir: PathBuf,
        #[arg(long)]
        swir2: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pre-fire minus post-fire NBR.
    Dnbr {
        #[arg(long)]
        pre: PathBuf,
        #[arg(long)]
        post: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Classify a dNBR raster into severity ranks 0..=6.
    Classify {
        #[arg(long)]
        dnbr: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write a palette PNG.
        #[arg(long)]
        png: Option<PathBuf>,
        /// Six ascending cut points, comma separated.
        #[arg(long, value_parser = parse_thresholds)]
        thresholds: Option<SeverityThresholds>,
    },
    /// Agreement between a prediction and a 0/1 reference raster.
    Assess {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
        /// Lowest severity class counted as burned (ignored for mask inputs).
        #[arg(long, default_value = "ModerateLowSeverity")]
        min_class: SeverityClass,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Burned mask from a burn-date raster for a date window.
    #[command(alias = "mcd64-mask")]
    Mcd64Window {
        #[arg(long)]
        input: PathBuf,
        /// `START/END`, end exclusive.
        #[arg(long, value_parser = parse_window)]
        window: DateWindow,
        /// Resample onto this raster's lattice (nearest neighbor).
        #[arg(long)]
        like: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rasterize active-fire hotspots onto a template lattice.
    FirmsRasterize {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        like: PathBuf,
        #[arg(long, default_value_t = 1000.0)]
        radius_m: f64,
        /// `START/END`, end exclusive; all hotspots when absent.
        #[arg(long, value_parser = parse_window)]
        window: Option<DateWindow>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a seeded synthetic bundle and a matching config.json.
    Synth {
        #[arg(long)]
        out_dir: PathBuf,
        /// Spec JSON; flags below override its fields.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Grid edge in pixels.
        #[arg(long)]
        size: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        cloud_fraction: Option<f64>,
        #[arg(long)]
        n_pre: Option<usize>,
        #[arg(long)]
        n_post: Option<usize>,
    },
}

#[derive(Debug, Args)]
pub struct SceneArgs {
    /// Scene manifest; repeatable.
    #[arg(long = "manifest", required = true)]
    pub manifests: Vec<PathBuf>,
    /// `START/END`, end exclusive.
    #[arg(long, value_parser = parse_window)]
    pub window: Option<DateWindow>,
    /// Keep scenes with cloud cover strictly below this percentage.
    #[arg(long)]
    pub max_cloud: Option<f64>,
    #[arg(long)]
    pub sort_by_date: bool,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum MethodArg {
    Mosaic,
    Median,
}

impl From<MethodArg> for CompositeMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Mosaic => CompositeMethod::Mosaic,
            MethodArg::Median => CompositeMethod::Median,
        }
    }
}

/// Parses `START/END` (ISO dates, end exclusive).
pub fn parse_window(s: &str) -> Result<DateWindow, String> {
    let (a, b) = s
        .split_once('/')
        .ok_or_else(|| format!("expected START/END, got `{s}`"))?;
    let date = |t: &str| {
        NaiveDate::parse_from_str(t.trim(), "%Y-%m-%d").map_err(|e| format!("`{t}`: {e}"))
    };
    DateWindow::new(date(a)?, date(b)?).map_err(|e| e.to_string())
}

fn parse_thresholds(s: &str) -> Result<SeverityThresholds, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect::<Result<_, _>>()?;
    let arr: [f64; 6] = v
        .try_into()
        .map_err(|v: Vec<f64>| format!("expected 6 cut points, got {}", v.len()))?;
    SeverityThresholds::new(arr).map_err(|e| e.to_string())
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    init_logging(cli.quiet, cli.verbose);
    match execute(cli) {
        Ok(()) => crate::error::EXIT_OK,
        Err(e) => {
            eprintln!("burnscan: {e}");
            e.exit_code()
        }
    }
}

fn init_logging(quiet: bool, verbose: u8) {
    let level = match (quiet, verbose) {
        (true, _) => log::LevelFilter::Error,
        (false, 0) => log::LevelFilter::Warn,
        (false, 1) => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .target(env_logger::Target::Stderr)
        .try_init();
}

fn executor(threads: Option<usize>) -> Result<Executor, CliError> {
    let n = threads.unwrap_or_else(|| {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    });
    if n == 0 {
        return Err(CliError::Config("--threads must be at least 1".into()));
    }
    Ok(Executor::new(n)?)
}

fn print_json(value: &impl Serialize) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("output serializes")
    );
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    let exec = executor(cli.threads)?;
    match cli.command {
        Command::Run { config, output_dir } => {
            let mut cfg = PipelineConfig::load(&config)?;
            if let Some(dir) = output_dir {
                cfg.output_dir = std::env::current_dir()?.join(dir);
            }
            let base = config.parent().unwrap_or(Path::new(""));
            let report = pipeline::run_config(&cfg, base, &exec)?;
            info!(
                "predicted {:.2} ha, reference {:.2} ha, dice {:.4}",
                report.area_ha.predicted, report.area_ha.reference, report.metrics.dice
            );
            println!(
                "{}",
                cfg.resolved(base).output_dir.join("report.json").display()
            );
            Ok(())
        }
        Command::Catalog { scenes, registry } => {
            let selected = select_scenes(&scenes, None)?;
            let product = match (&scenes.window, registry) {
                (None, _) => None,
                (Some(w), reg) => {
                    let products = match reg {
                        Some(p) => load_registry(p)?,
                        None => default_registry(),
                    };
                    match select_burnt_area_product(&products, w) {
                        Ok(p) => Some(p.name),
                        Err(e) => {
                            warn!("{e}");
                            None
                        }
                    }
                }
            };
            #[derive(Serialize)]
            struct Listing {
                scenes: Vec<SceneMeta>,
                product: Option<String>,
            }
            print_json(&Listing {
                scenes: selected,
                product,
            });
            Ok(())
        }
        Command::Composite {
            scenes,
            roi,
            bands,
            method,
            no_mask,
            out_dir,
        } => {
            let roi: RoiPolygon = read_json(&roi)?;
            let all = select_scenes(&scenes, Some(&roi))?;
            let masking = if no_mask {
                Masking::None
            } else {
                Masking::Default
            };
            let policies = masking.policies()?;
            let band_map = BandMap::default();
            let req = CompositeRequest {
                window: scenes.window.unwrap_or_else(DateWindow::unbounded),
                max_cloud: scenes.max_cloud,
                roi: &roi,
                bands: bands.clone(),
                band_map: &band_map,
                policies: &policies,
                method: method.into(),
                analysis: None,
            };
            let comp = build_composite(&all, &req, &exec)?;
            for w in &comp.warnings {
                warn!("{w}");
            }
            std::fs::create_dir_all(&out_dir)?;
            for (name, grid) in &comp.bands {
                write_geotiff(out_dir.join(format!("{name}.tif")), grid)?;
            }
            info!("composited {} scenes", comp.scene_ids.len());
            Ok(())
        }
        Command::Nbr { nir, swir2, out } => {
            let (nir, swir2) = (read_grid(&nir)?, read_grid(&swir2)?);
            let g = nbr(
                BandPair {
                    nir: &nir,
                    swir2: &swir2,
                },
                &exec,
            )?;
            Ok(write_geotiff(out, &g)?)
        }
        Command::Dnbr { pre, post, out } => {
            let g = dnbr(&read_grid(&pre)?, &read_grid(&post)?, &exec)?;
            Ok(write_geotiff(out, &g)?)
        }
        Command::Classify {
            dnbr,
            out,
            png,
            thresholds,
        } => {
            let input = read_grid(&dnbr)?;
            let classes = if input.kind() == GridKind::Categorical {
                warn!(
                    "{} is already categorical; copying it unchanged",
                    dnbr.display()
                );
                input
            } else {
                classify(&input, &thresholds.unwrap_or_default(), &exec)?
            };
            write_geotiff(&out, &classes)?;
            if let Some(p) = png {
                write_severity_png(&p, &classes)?;
            }
            Ok(())
        }
        Command::Assess {
            pred,
            reference,
            min_class,
            out,
        } => {
            let pred = read_grid(&pred)?;
            let reference = on_lattice_of(read_grid(&reference)?, &pred)?;
            let rule = if pred.kind() == GridKind::Mask {
                PredictionRule::Mask
            } else {
                PredictionRule::MinClass(min_class)
            };
            let a = assess(&pred, rule, &reference, &exec)?;
            let report = AssessReport {
                schema: REPORT_SCHEMA,
                area_ha: AssessAreas {
                    predicted: a.predicted_ha,
                    reference: a.reference_ha,
                },
                matrix: a.matrix,
                metrics: a.metrics,
            };
            match out {
                Some(p) => {
                    let text = serde_json::to_string_pretty(&report).expect("report serializes");
                    std::fs::write(&p, text + "\n").map_err(|e| {
                        CliError::Data(format!("cannot write {}: {e}", p.display()))
                    })?;
                }
                None => print_json(&report),
            }
            Ok(())
        }
        Command::Mcd64Window {
            input,
            window,
            like,
            out,
        } => {
            let dates = BurnDateGrid::new(read_grid(&input)?)?;
            let mut mask = burned_mask(&dates, &split_by_year(&window), &exec)?;
            if let Some(t) = like {
                mask = on_lattice_of(mask, &read_grid(&t)?)?;
            }
            Ok(write_geotiff(out, &mask)?)
        }
        Command::FirmsRasterize {
            csv,
            like,
            radius_m,
            window,
            out,
        } => {
            let points = load_firms_csv(&csv)?;
            let template = read_grid(&like)?;
            let mask = rasterize_hotspots(&points, &template, radius_m, window.as_ref())?;
            Ok(write_geotiff(out, &mask)?)
        }
        Command::Synth {
            out_dir,
            spec,
            size,
            seed,
            cloud_fraction,
            n_pre,
            n_post,
        } => {
            let mut s: SynthSpec = match &spec {
                Some(p) => read_json(p)?,
                None => SynthSpec::default(),
            };
            if let Some(n) = size {
                let fresh = SynthSpec::rompin(n);
                s.grid = fresh.grid;
                s.burn_polygon = fresh.burn_polygon;
            }
            if let Some(v) = seed {
                s.seed = v;
            }
            if let Some(v) = cloud_fraction {
                s.cloud_fraction = v;
            }
            if let Some(v) = n_pre {
                s.n_pre_scenes = v;
            }
            if let Some(v) = n_post {
                s.n_post_scenes = v;
            }
            let cfg = write_synth(&s, &out_dir)?;
            println!("{}", cfg.display());
            Ok(())
        }
    }
}

/// Generates a bundle into `out_dir` and writes `config.json` for it.
/// Returns the config path.
pub fn write_synth(spec: &SynthSpec, out_dir: &Path) -> Result<PathBuf, CliError> {
    let bundle = generate(spec, out_dir)?;
    let pre = load_manifest(&bundle.pre_manifest)?;
    let post = load_manifest(&bundle.post_manifest)?;
    let span = |scenes: &[SceneMeta]| -> Result<DateWindow, CliError> {
        let first = scenes.iter().map(|s| s.acq_date).min();
        let last = scenes.iter().map(|s| s.acq_date).max();
        match (first, last) {
            (Some(a), Some(b)) => Ok(DateWindow::new(a, b + chrono::Days::new(1))?),
            _ => Err(CliError::Config("synthetic bundle has no scenes".into())),
        }
    };
    let burn = bundle.truth.burn_date;
    let month_start = burn.with_day(1).expect("day 1 exists");
    let month_end = month_start + chrono::Months::new(1);
    let name = |p: &Path| PathBuf::from(p.file_name().expect("bundle file name"));
    let mut cfg = PipelineConfig::with_inputs(
        vec![name(&bundle.pre_manifest), name(&bundle.post_manifest)],
        name(&bundle.mcd64),
        name(&bundle.firms_csv),
    );
    cfg.roi = spec.extent()?;
    cfg.pre_window = span(&pre)?;
    cfg.post_window = span(&post)?;
    cfg.mcd64_window = DateWindow::new(month_start, month_end)?;
    // Synthetic scenes carry their true cloudy fraction; only fully
    // clouded scenes are dropped.
    cfg.max_cloud = Some(100.0);
    cfg.validate()?;
    let path = out_dir.join("config.json");
    let text = serde_json::to_string_pretty(&cfg).expect("config serializes");
    std::fs::write(&path, text + "\n")
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

fn select_scenes(args: &SceneArgs, roi: Option<&RoiPolygon>) -> Result<Vec<SceneMeta>, CliError> {
    let mut scenes = Vec::new();
    for m in &args.manifests {
        scenes.extend(load_manifest(m)?);
    }
    if args.sort_by_date {
        sort_by_date(&mut scenes);
    }
    let window = args.window.unwrap_or_else(DateWindow::unbounded);
    Ok(filter_scenes(&scenes, &window, args.max_cloud, roi))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Nearest-neighbor resample of `g` onto `template`'s lattice, skipped when
/// already aligned.
fn on_lattice_of(g: Grid, template: &Grid) -> Result<Grid, CliError> {
    if g.is_aligned_with(template) {
        return Ok(g);
    }
    Ok(resample_to(
        &g,
        template.transform(),
        template.width(),
        template.height(),
        ResampleMethod::Nearest,
    )?)
}
