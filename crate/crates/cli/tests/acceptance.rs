//! Acceptance criteria A1-A9. Runs as a plain binary (`harness = false`) so
//! every criterion prints exactly one PASS/FAIL line; the process fails if
//! any criterion fails.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use burnscan::commands::write_synth;
use burnscan_core::assessment::{confusion_by, metrics, ConfusionMatrix, PredictionRule};
use burnscan_core::catalog::{
    default_registry, filter_scenes, select_burnt_area_product, DateWindow, SceneMeta, Sensor,
};
use burnscan_core::geotiff::read_grid;
use burnscan_core::preprocess::{composite, CompositeMethod};
use burnscan_core::raster::{
    Bounds, Executor, GeoTransform, Grid, GridKind, RoiPolygon, INT_NODATA,
};
use burnscan_core::reference::{burned_mask, BurnDateGrid, DoyWindow};
use burnscan_core::severity::{
    classify, dnbr, nbr, pixel_hectares, BandPair, SeverityClass, SeverityThresholds,
};
use burnscan_core::synth::{truth_compare, CloudScenes, SynthSpec, SCL_CLOUD};
use chrono::{Datelike, Months, NaiveDate};
use proptest::prelude::*;
use proptest::strategy::ValueTree;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use serde_json::Value;

const A1_SIZE: usize = 2048;
const A1_RUNTIME: Duration = Duration::from_secs(10);

struct Outcome {
    pass: bool,
    detail: String,
}

fn verdict(ok: bool, detail: String) -> Outcome {
    Outcome { pass: ok, detail }
}

fn burnscan(args: &[&str]) -> (i32, Duration, String) {
    let start = Instant::now();
    let o = Command::new(env!("CARGO_BIN_EXE_burnscan"))
        .args(args)
        .output()
        .expect("binary runs");
    let elapsed = start.elapsed();
    (
        o.status.code().unwrap_or(-1),
        elapsed,
        String::from_utf8_lossy(&o.stderr).into_owned(),
    )
}

fn run_config(config: &Path, threads: usize) -> Duration {
    let t = threads.to_string();
    let (code, elapsed, err) = burnscan(&[
        "--quiet",
        "--threads",
        &t,
        "run",
        "--config",
        config.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "burnscan run failed: {err}");
    elapsed
}

fn read_report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn ones(g: &Grid) -> usize {
    g.values()
        .iter()
        .filter(|&&v| v == 1.0 && !g.is_nodata(v))
        .count()
}

/// Shared A1 workload: a cloudy 2048 x 2048 bundle run single-threaded.
struct A1Run {
    bundle: PathBuf,
    config: PathBuf,
    out: PathBuf,
    runtime: Duration,
}

fn a1_run(root: &Path) -> A1Run {
    let bundle = root.join("a1");
    let mut spec = SynthSpec::rompin(A1_SIZE);
    spec.cloud_fraction = 0.3;
    let config = write_synth(&spec, &bundle).unwrap();
    let runtime = run_config(&config, 1);
    A1Run {
        out: bundle.join("out"),
        bundle,
        config,
        runtime,
    }
}

fn a1(run: &A1Run) -> Outcome {
    let severity = read_grid(run.out.join("severity.tif")).unwrap();
    let truth = read_grid(run.bundle.join("truth_mask.tif")).unwrap();
    let min = SeverityClass::ModerateLowSeverity.rank() as f32;
    let values = severity
        .values()
        .iter()
        .map(|&v| {
            if severity.is_nodata(v) {
                INT_NODATA
            } else {
                (v >= min) as u8 as f32
            }
        })
        .collect();
    let burned = Grid::new(
        severity.width(),
        severity.height(),
        severity.transform().clone(),
        INT_NODATA,
        values,
        GridKind::Mask,
    )
    .unwrap();
    let cmp = truth_compare(&burned, &truth).unwrap();
    let rel = cmp.relative_area_delta.unwrap();
    verdict(
        cmp.dice >= 0.95 && rel <= 0.05 && run.runtime <= A1_RUNTIME,
        format!(
            "dice {:.4} (>= 0.95), area {:.2} vs truth {:.2} ha, delta {:.2} % (<= 5 %), runtime {:.2} s on {A1_SIZE}x{A1_SIZE} with 1 thread (<= 10 s)",
            cmp.dice,
            cmp.result_ha,
            cmp.truth_ha,
            rel * 100.0,
            run.runtime.as_secs_f64()
        ),
    )
}

fn a2(run: &A1Run) -> Outcome {
    let dates = BurnDateGrid::new(read_grid(run.bundle.join("mcd64a1.tif")).unwrap()).unwrap();
    let window = DoyWindow {
        year: 2021,
        start_doy: 60,
        end_doy: 90,
    };
    let native = burned_mask(&dates, &[window], &Executor::sequential()).unwrap();
    let native_ha = ones(&native) as f64 * pixel_hectares(&native).unwrap();
    let report = read_report(&run.out);
    let agree = report["area_ha"]["agree"].as_bool().unwrap();
    let reference = report["area_ha"]["reference"].as_f64().unwrap();
    let predicted = report["area_ha"]["predicted"].as_f64().unwrap();
    verdict(
        native_ha > 300.0 && reference > 300.0 && agree,
        format!(
            "burn-date mask {native_ha:.1} ha natively, {reference:.1} ha on the analysis grid (> 300 ha); predicted {predicted:.1} ha, report agree = {agree} (15 % tolerance)"
        ),
    )
}

fn a3(root: &Path) -> Outcome {
    let dir = root.join("a3");
    let mut spec = SynthSpec::rompin(512);
    spec.n_post_scenes = 1;
    spec.cloud_fraction = 0.3;
    spec.cloud_scenes = CloudScenes::PostOnly;
    spec.clouds_avoid_burn = true;
    let config = write_synth(&spec, &dir).unwrap();
    let mut cfg: Value = serde_json::from_str(&std::fs::read_to_string(&config).unwrap()).unwrap();

    cfg["masking"] = Value::String("none".into());
    cfg["output_dir"] = Value::String("unmasked".into());
    let unmasked_cfg = dir.join("unmasked.json");
    std::fs::write(&unmasked_cfg, cfg.to_string()).unwrap();
    run_config(&unmasked_cfg, 2);
    run_config(&config, 2);

    let scl = read_grid(dir.join("scenes/S2_POST_00/SCL.tif")).unwrap();
    let truth = read_grid(dir.join("truth_mask.tif")).unwrap();
    let unmasked = read_grid(dir.join("unmasked/severity.tif")).unwrap();
    let masked = read_grid(dir.join("out/severity.tif")).unwrap();
    let min = SeverityClass::ModerateLowSeverity.rank() as f32;
    let (mut cloudy, mut misread, mut blanked) = (0usize, 0usize, 0usize);
    for i in 0..truth.len() {
        if scl.values()[i] != SCL_CLOUD || truth.values()[i] != 0.0 {
            continue;
        }
        cloudy += 1;
        let u = unmasked.values()[i];
        if !unmasked.is_nodata(u) && u >= min {
            misread += 1;
        }
        if masked.is_nodata(masked.values()[i]) {
            blanked += 1;
        }
    }
    let share = misread as f64 / cloudy.max(1) as f64;
    verdict(
        cloudy > 0 && share >= 0.5 && blanked == cloudy,
        format!(
            "{cloudy} cloud-contaminated unburned pixels; unmasked: {:.1} % at >= ModerateLow (>= 50 %); masked: {blanked}/{cloudy} nodata (100 %)",
            share * 100.0
        ),
    )
}

fn a4() -> Outcome {
    let registry = default_registry();
    let d = |y, m, day| NaiveDate::from_ymd_opt(y, m, day).unwrap();
    let fire = DateWindow::new(d(2021, 3, 1), d(2021, 4, 1)).unwrap();
    let chosen = select_burnt_area_product(&registry, &fire)
        .map(|p| p.name)
        .ok();
    let fire_ok = chosen.as_deref().is_some_and(|n| n.starts_with("MCD64A1"));

    let (mut windows, mut mismatches) = (0, 0);
    let mut start = d(2000, 1, 1);
    while start.year() <= 2023 {
        let end = start + Months::new(1);
        let w = DateWindow::new(start, end).unwrap();
        // Oracle: walk every day of the window against each product's span.
        let brute = registry
            .iter()
            .find(|p| {
                start
                    .iter_days()
                    .take_while(|&day| day < end)
                    .all(|day| p.temporal_start <= day && day <= p.temporal_end)
            })
            .map(|p| p.name.clone());
        let got = select_burnt_area_product(&registry, &w)
            .map(|p| p.name)
            .ok();
        mismatches += (brute != got) as usize;
        windows += 1;
        start = end;
    }
    verdict(
        fire_ok && mismatches == 0,
        format!(
            "2021-03 window selects {}; {windows} monthly windows 2000-2023, {mismatches} mismatches vs day-by-day scan",
            chosen.as_deref().unwrap_or("nothing")
        ),
    )
}

fn a5() -> Outcome {
    let t = GeoTransform::new(0.0, 0.0, 500.0, 500.0, "EPSG:32648").unwrap();
    let samples: Vec<f32> = (0..=366).map(|v| v as f32).collect();
    let n = samples.len();
    let grid = Grid::new(n, 1, t, INT_NODATA, samples.clone(), GridKind::BurnDate).unwrap();
    let dates = BurnDateGrid::new(grid).unwrap();
    let exec = Executor::sequential();

    let mut runner = runner(1);
    let window = (2000i32..2024, 1u16..=366, 0u16..=365).prop_map(|(year, a, len)| {
        let days = if NaiveDate::from_ymd_opt(year, 12, 31).unwrap().ordinal() == 366 {
            366
        } else {
            365
        };
        let start = a.min(days);
        DoyWindow {
            year,
            start_doy: start,
            end_doy: (start + len).min(days),
        }
    });
    let mut mismatches = 0;
    for _ in 0..200 {
        let w = window.new_tree(&mut runner).unwrap().current();
        let mask = burned_mask(&dates, &[w], &exec).unwrap();
        for (&v, &m) in samples.iter().zip(mask.values()) {
            // Oracle: 0 means unburned; any other day is burned iff it lies
            // inside the inclusive range.
            let expected = v >= 1.0 && v as u16 >= w.start_doy && v as u16 <= w.end_doy;
            mismatches += (expected != (m == 1.0)) as usize;
        }
    }
    verdict(
        mismatches == 0,
        format!("200 random windows x {n} burn-date samples, {mismatches} mismatches"),
    )
}

fn brute_matrix(pred: &[f32], reference: &[f32]) -> (ConfusionMatrix, usize) {
    let mut m = ConfusionMatrix::default();
    let mut valid = 0;
    for (&p, &r) in pred.iter().zip(reference) {
        if p == INT_NODATA || r == INT_NODATA {
            continue;
        }
        valid += 1;
        match (p == 1.0, r == 1.0) {
            (true, true) => m.tp += 1,
            (true, false) => m.fp += 1,
            (false, true) => m.fn_ += 1,
            (false, false) => m.tn += 1,
        }
    }
    (m, valid)
}

fn a6() -> Outcome {
    const N: usize = 32;
    let t = GeoTransform::new(0.0, 0.0, 20.0, 20.0, "EPSG:32648").unwrap();
    let mask = |v: Vec<f32>| Grid::new(N, N, t.clone(), INT_NODATA, v, GridKind::Mask).unwrap();
    let cell = prop_oneof![1 => Just(INT_NODATA), 6 => Just(0.0f32), 4 => Just(1.0f32)];
    let pair = (
        prop::collection::vec(cell.clone(), N * N),
        prop::collection::vec(cell, N * N),
    );
    let mut runner = runner(1);
    let exec = Executor::sequential().with_tile(7);
    let mut worst = 0f64;
    let mut tally_errors = 0;
    for _ in 0..100 {
        let (p, r) = pair.new_tree(&mut runner).unwrap().current();
        let m = confusion_by(
            &mask(p.clone()),
            PredictionRule::Mask,
            &mask(r.clone()),
            &exec,
        )
        .unwrap();
        let (b, valid) = brute_matrix(&p, &r);
        tally_errors += (m != b || m.total() as usize != valid) as usize;
        let got = metrics(&m).unwrap();
        let (tp, fp, fn_, tn) = (b.tp as f64, b.fp as f64, b.fn_ as f64, b.tn as f64);
        let n = tp + fp + fn_ + tn;
        let po = (tp + tn) / n;
        let pe = ((tp + fp) / n) * ((tp + fn_) / n) + ((tn + fn_) / n) * ((tn + fp) / n);
        let expect = [
            po,
            2.0 * tp / (2.0 * tp + fp + fn_),
            (po - pe) / (1.0 - pe),
            fn_ / (tp + fn_),
            fp / (tp + fp),
        ];
        let have = [
            got.oa,
            got.dice,
            got.kappa,
            got.omission.unwrap_or(f64::NAN),
            got.commission.unwrap_or(f64::NAN),
        ];
        for (e, h) in expect.iter().zip(have) {
            worst = worst.max((e - h).abs());
        }
    }
    let worked = ConfusionMatrix {
        tp: 40,
        fp: 5,
        fn_: 5,
        tn: 50,
    };
    let kappa = metrics(&worked).unwrap().kappa;
    let kappa_err = (kappa - (0.9 - 0.505) / 0.495).abs();
    verdict(
        tally_errors == 0 && worst <= 1e-12 && kappa_err <= 1e-9,
        format!(
            "100 random 32x32 pairs: {tally_errors} tally mismatches, max metric error {worst:.1e} (<= 1e-12); worked kappa {kappa:.12}, error {kappa_err:.1e} (<= 1e-9)"
        ),
    )
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "tif" || x == "png"))
        .map(|p| {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            (name, std::fs::read(&p).unwrap())
        })
        .collect()
}

fn without_timings(mut report: Value) -> Value {
    report.as_object_mut().unwrap().remove("timings_ms");
    report
}

fn a7(run: &A1Run) -> Outcome {
    let single = files(&run.out);
    let single_report = without_timings(read_report(&run.out));
    let four = run_config(&run.config, 4);
    let multi = files(&run.out);
    let multi_report = without_timings(read_report(&run.out));
    let differing: Vec<&String> = single
        .keys()
        .filter(|k| multi.get(*k) != single.get(*k))
        .collect();
    let same = differing.is_empty() && single.len() == multi.len() && single_report == multi_report;
    let ratio = four.as_secs_f64() / run.runtime.as_secs_f64();
    let cores = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    let speed = if ratio <= 0.6 {
        format!("4-thread time {ratio:.2}x of 1-thread (<= 0.6)")
    } else {
        format!("warning: 4-thread time {ratio:.2}x of 1-thread misses the 0.6 soft target ({cores} core(s) available)")
    };
    verdict(
        same,
        format!(
            "{} artifacts byte-identical across 1 and 4 threads, report equal without timings: {}; differing: {differing:?}; {speed}",
            single.len(),
            single_report == multi_report
        ),
    )
}

const CASES: u32 = 1000;
const ND: f32 = -9999.0;

/// Runs `test` over `CASES` draws of `strategy`, returning the failure text.
fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    })
}

fn property<S: Strategy>(
    name: &str,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let mut runner = runner(CASES);
    runner
        .run(&strategy, test)
        .map_err(|e| format!("{name}: {e}"))
}

fn a8() -> Outcome {
    let t = GeoTransform::new(500_000.0, 300_000.0, 20.0, 20.0, "EPSG:32648").unwrap();
    let grid = move |v: Vec<f32>, kind| Grid::new(4, 3, t.clone(), ND, v, kind).unwrap();
    let g1 = grid.clone();
    let refl = move || {
        let g = g1.clone();
        prop::collection::vec(prop_oneof![1 => Just(ND), 4 => 0.0f32..1.0], 12)
            .prop_map(move |v| g(v, GridKind::Reflectance))
    };
    let g2 = grid.clone();
    let index = move || {
        let g = g2.clone();
        prop::collection::vec(prop_oneof![1 => Just(ND), 4 => -2.0f32..2.0], 12)
            .prop_map(move |v| g(v, GridKind::Index))
    };
    let thresholds = || {
        prop::collection::vec(-1.0f64..1.0, 6).prop_filter_map("ascending", |mut t| {
            t.sort_by(f64::total_cmp);
            SeverityThresholds::new(t.try_into().unwrap()).ok()
        })
    };
    let ex = Executor::sequential().with_tile(2);
    let mosaic = |s: &[Grid]| {
        let r: Vec<&Grid> = s.iter().collect();
        composite(&r, CompositeMethod::Mosaic, &ex).unwrap()
    };
    let negated = |a: &Grid, b: &Grid| {
        a.values()
            .iter()
            .zip(b.values())
            .all(|(&x, &y)| (x == ND) == (y == ND) && (x == ND || x == -y))
    };

    let checks: Vec<Result<(), String>> = vec![
        property("nbr range", (refl(), refl()), |(n, s)| {
            let out = nbr(BandPair { nir: &n, swir2: &s }, &ex).unwrap();
            prop_assert!(out
                .values()
                .iter()
                .all(|&v| v == ND || (-1.0..=1.0).contains(&v)));
            Ok(())
        }),
        property("nbr antisymmetry", (refl(), refl()), |(a, b)| {
            let ab = nbr(BandPair { nir: &a, swir2: &b }, &ex).unwrap();
            let ba = nbr(BandPair { nir: &b, swir2: &a }, &ex).unwrap();
            prop_assert!(negated(&ab, &ba));
            Ok(())
        }),
        property("dnbr antisymmetry", (index(), index()), |(a, b)| {
            prop_assert!(negated(
                &dnbr(&a, &b, &ex).unwrap(),
                &dnbr(&b, &a, &ex).unwrap()
            ));
            Ok(())
        }),
        property(
            "classify monotone",
            (thresholds(), -2.0f32..2.0, -2.0f32..2.0),
            |(t, a, b)| {
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                prop_assert!(t.class_of(lo) <= t.class_of(hi));
                Ok(())
            },
        ),
        property(
            "classify boundary rule",
            (thresholds(), 0usize..6, index()),
            |(t, i, d)| {
                let cut = t.values()[i] as f32;
                prop_assert_eq!(t.class_of(cut).rank() as usize, i + 1);
                prop_assert_eq!(t.class_of(cut.next_down()).rank() as usize, i);
                let c = classify(&d, &t, &ex).unwrap();
                for (&v, &k) in d.values().iter().zip(c.values()) {
                    let ok = if v == ND {
                        c.is_nodata(k)
                    } else {
                        k == t.class_of(v).rank() as f32
                    };
                    prop_assert!(ok, "dNBR {} classified as {}", v, k);
                }
                Ok(())
            },
        ),
        property(
            "mosaic last wins",
            prop::collection::vec(refl(), 1..=5),
            |s| {
                let out = mosaic(&s);
                for i in 0..12 {
                    let want = s
                        .iter()
                        .rev()
                        .map(|g| g.values()[i])
                        .find(|&v| v != ND)
                        .unwrap_or(ND);
                    prop_assert_eq!(out.values()[i], want);
                }
                Ok(())
            },
        ),
        property(
            "mosaic associativity",
            (
                prop::collection::vec(refl(), 1..=4),
                prop::collection::vec(refl(), 1..=4),
            ),
            |(a, b)| {
                let all: Vec<Grid> = a.iter().chain(&b).cloned().collect();
                prop_assert_eq!(mosaic(&all), mosaic(&[mosaic(&a), mosaic(&b)]));
                Ok(())
            },
        ),
        property(
            "median permutation invariance",
            prop::collection::vec(refl(), 1..=6).prop_flat_map(|s| {
                let n = s.len();
                (Just(s), Just((0..n).collect::<Vec<_>>()).prop_shuffle())
            }),
            |(s, order)| {
                let shuffled: Vec<&Grid> = order.iter().map(|&i| &s[i]).collect();
                let r: Vec<&Grid> = s.iter().collect();
                let a = composite(&r, CompositeMethod::Median, &ex).unwrap();
                let b = composite(&shuffled, CompositeMethod::Median, &ex).unwrap();
                prop_assert_eq!(a, b);
                Ok(())
            },
        ),
        property(
            "scene filter idempotence",
            (
                prop::collection::vec(
                    (0i64..800, prop::option::of(0.0f64..100.0), 0.0f64..50.0),
                    0..12,
                ),
                0i64..400,
                1i64..400,
                prop::option::of(0.0f64..100.0),
            ),
            |(scenes, start, len, max_cloud)| {
                let day0 = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
                let metas: Vec<SceneMeta> = scenes
                    .iter()
                    .enumerate()
                    .map(|(i, &(day, cloud, x))| SceneMeta {
                        scene_id: format!("S{i}"),
                        sensor: Sensor::Sentinel2L2A,
                        acq_date: day0 + chrono::Duration::days(day),
                        cloud_percent: cloud,
                        bounds: Bounds {
                            min_x: x,
                            min_y: 0.0,
                            max_x: x + 10.0,
                            max_y: 10.0,
                        },
                        crs: "EPSG:32648".into(),
                        scale: 1e-4,
                        bands: BTreeMap::new(),
                    })
                    .collect();
                let window = DateWindow::new(
                    day0 + chrono::Duration::days(start),
                    day0 + chrono::Duration::days(start + len),
                )
                .unwrap();
                let roi = RoiPolygon::rectangle(
                    "EPSG:32648",
                    Bounds {
                        min_x: 20.0,
                        min_y: 0.0,
                        max_x: 40.0,
                        max_y: 10.0,
                    },
                )
                .unwrap();
                let once = filter_scenes(&metas, &window, max_cloud, Some(&roi));
                prop_assert_eq!(filter_scenes(&once, &window, max_cloud, Some(&roi)), once);
                Ok(())
            },
        ),
    ];
    let failures: Vec<String> = checks.into_iter().filter_map(Result::err).collect();
    verdict(
        failures.is_empty(),
        format!(
            "9 invariants x {CASES} cases, {} failing {failures:?} (full suites: burnscan-core tests/properties.rs)",
            failures.len()
        ),
    )
}

fn a9(run: &A1Run) -> Outcome {
    let firms = read_grid(run.out.join("reference_firms.tif")).unwrap();
    let mcd = read_grid(run.out.join("reference_mcd64.tif")).unwrap();
    let ha = pixel_hectares(&mcd).unwrap();
    let (f, m) = (ones(&firms) as f64 * ha, ones(&mcd) as f64 * ha);
    verdict(
        f >= m,
        format!("1 km hotspot mask {f:.1} ha >= burn-date mask {m:.1} ha"),
    )
}

fn main() {
    // libtest passes filter and flag arguments; honor `--list` so tooling
    // that enumerates tests does not trigger the full run.
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let root = tempfile::tempdir().unwrap();
    let mut shared: Option<A1Run> = None;
    let mut results = Vec::new();

    type Check<'a> = Box<dyn FnOnce(&mut Option<A1Run>) -> Outcome + 'a>;
    let needs_a1 = |f: fn(&A1Run) -> Outcome| -> Check {
        let root = root.path().to_path_buf();
        Box::new(move |shared: &mut Option<A1Run>| {
            let run = shared.get_or_insert_with(|| a1_run(&root));
            f(run)
        })
    };
    let criteria: Vec<(&str, &str, Check)> = vec![
        ("A1", "end-to-end recovery", needs_a1(a1)),
        ("A2", "reference area above 300 ha", needs_a1(a2)),
        (
            "A3",
            "cloud limitation regression",
            Box::new(|_| a3(root.path())),
        ),
        ("A4", "product selection", Box::new(|_| a4())),
        ("A5", "burn-date decode oracle", Box::new(|_| a5())),
        ("A6", "metric oracles", Box::new(|_| a6())),
        ("A7", "determinism across threads", needs_a1(a7)),
        ("A8", "numeric invariants", Box::new(|_| a8())),
        ("A9", "hotspot footprint covers reference", needs_a1(a9)),
    ];
    for (id, name, check) in criteria {
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(|| check(&mut shared))).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome {
                pass: false,
                detail: format!("panicked: {msg}"),
            }
        });
        let status = if outcome.pass { "PASS" } else { "FAIL" };
        println!(
            "{id} {status} {name}: {} [{:.1} s]",
            outcome.detail,
            started.elapsed().as_secs_f64()
        );
        results.push(outcome.pass);
    }
    let failed = results.iter().filter(|&&p| !p).count();
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
