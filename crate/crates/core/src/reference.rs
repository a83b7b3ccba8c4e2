//! Reference burnt-area layers: day-of-year burn-date grids and active-fire
//! hotspot points.

use std::fmt;
use std::io::Read;
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::catalog::DateWindow;
use crate::crs::{lonlat_to_map, GroundScale};
use crate::error::{Error, Result};
use crate::raster::{Executor, Grid, GridKind, INT_NODATA};

/// Inclusive day-of-year range within one calendar year.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DoyWindow {
    pub year: i32,
    pub start_doy: u16,
    pub end_doy: u16,
}

impl DoyWindow {
    pub fn contains(&self, doy: u16) -> bool {
        (self.start_doy..=self.end_doy).contains(&doy)
    }
}

impl fmt::Display for DoyWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} DOY {}..={}", self.year, self.start_doy, self.end_doy)
    }
}

/// Day-of-year range of the half-open window `[start, end)`. Fails with
/// [`Error::CrossYearWindow`] when the window spans more than one year.
pub fn doy_window(window: &DateWindow) -> Result<DoyWindow> {
    let last = window.last_day();
    if last.year() != window.start.year() {
        return Err(Error::CrossYearWindow {
            start: window.start,
            end: window.end,
        });
    }
    Ok(DoyWindow {
        year: window.start.year(),
        start_doy: window.start.ordinal() as u16,
        end_doy: last.ordinal() as u16,
    })
}

/// Splits a window into per-year day-of-year ranges, in date order.
pub fn split_by_year(window: &DateWindow) -> Vec<DoyWindow> {
    let last = window.last_day();
    (window.start.year()..=last.year())
        .map(|year| {
            let start = if year == window.start.year() {
                window.start
            } else {
                NaiveDate::from_yo_opt(year, 1).expect("valid year")
            };
            let end = if year == last.year() {
                last
            } else {
                NaiveDate::from_ymd_opt(year, 12, 31).expect("valid year")
            };
            DoyWindow {
                year,
                start_doy: start.ordinal() as u16,
                end_doy: end.ordinal() as u16,
            }
        })
        .collect()
}

/// Burn-date raster: 0 unburned, 1..=366 day of burn, negative values are
/// quality codes (unmapped, water, ...).
#[derive(Debug, Clone, PartialEq)]
pub struct BurnDateGrid(Grid);

impl BurnDateGrid {
    pub fn new(grid: Grid) -> Result<Self> {
        for &v in grid.values() {
            if grid.is_nodata(v) {
                continue;
            }
            if v.fract() != 0.0 || v > 366.0 {
                return Err(Error::InvalidGrid(format!(
                    "burn-date sample {v} is not 0, a day of year or a negative code"
                )));
            }
        }
        Ok(BurnDateGrid(grid.with_kind(GridKind::BurnDate)?))
    }

    pub fn grid(&self) -> &Grid {
        &self.0
    }

    pub fn into_grid(self) -> Grid {
        self.0
    }
}

/// 1 where the burn date falls inside any of `windows`, 0 where the pixel
/// is unburned or burned outside them, nodata for quality codes and nodata.
pub fn burned_mask(dates: &BurnDateGrid, windows: &[DoyWindow], exec: &Executor) -> Result<Grid> {
    let g = dates.grid();
    let nodata = INT_NODATA;
    exec.map_tiled(&[g], GridKind::Mask, nodata, |s| {
        let v = s[0];
        if g.is_nodata(v) || v < 0.0 {
            nodata
        } else if v >= 1.0 && windows.iter().any(|w| w.contains(v as u16)) {
            1.0
        } else {
            0.0
        }
    })
}

/// Hotspot detection confidence as published: a percentage (MODIS) or a
/// low/nominal/high category (VIIRS).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Confidence {
    Percent(f64),
    Category(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hotspot {
    pub lat: f64,
    pub lon: f64,
    pub acq_date: NaiveDate,
    pub confidence: Option<Confidence>,
}

/// Reads a FIRMS-style CSV with `latitude`, `longitude` and `acq_date`
/// columns (case-insensitive, any order); `confidence` is optional and other
/// columns are ignored.
pub fn load_firms_csv(path: impl AsRef<Path>) -> Result<Vec<Hotspot>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_firms(file).map_err(|e| match e {
        Error::Parse { message, .. } => Error::parse(path, message),
        other => other,
    })
}

/// Parses FIRMS CSV text; see [`load_firms_csv`]. Rows are counted from 1
/// after the header in error messages.
pub fn parse_firms(reader: impl Read) -> Result<Vec<Hotspot>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::parse("<firms>", e))?
        .iter()
        .map(|h| h.to_ascii_lowercase())
        .collect::<Vec<_>>();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (Some(lat_i), Some(lon_i), Some(date_i)) =
        (col("latitude"), col("longitude"), col("acq_date"))
    else {
        return Err(Error::parse(
            "<firms>",
            "header must contain latitude, longitude and acq_date",
        ));
    };
    let conf_i = col("confidence");

    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| Error::parse("<firms>", format!("data row {row}: {e}")))?;
        let field = |idx: usize| rec.get(idx).unwrap_or("");
        let number = |idx: usize, what: &str| -> Result<f64> {
            field(idx)
                .parse::<f64>()
                .map_err(|_| Error::InvalidCoordinate {
                    row,
                    reason: format!("{what} {:?} is not a number", field(idx)),
                })
        };
        let lat = number(lat_i, "latitude")?;
        let lon = number(lon_i, "longitude")?;
        if !(-90.0..=90.0).contains(&lat) {
            return Err(Error::InvalidCoordinate {
                row,
                reason: format!("latitude {lat} outside [-90, 90]"),
            });
        }
        if !(-180.0..=180.0).contains(&lon) {
            return Err(Error::InvalidCoordinate {
                row,
                reason: format!("longitude {lon} outside [-180, 180]"),
            });
        }
        let acq_date = field(date_i).parse::<NaiveDate>().map_err(|_| {
            Error::parse(
                "<firms>",
                format!("data row {row}: bad acq_date {:?}", field(date_i)),
            )
        })?;
        let confidence = conf_i.map(field).filter(|s| !s.is_empty()).map(|s| {
            s.parse::<f64>()
                .map(Confidence::Percent)
                .unwrap_or_else(|_| Confidence::Category(s.to_string()))
        });
        out.push(Hotspot {
            lat,
            lon,
            acq_date,
            confidence,
        });
    }
    Ok(out)
}

/// Burns hotspots into a 0/1 mask on `template`'s lattice: a pixel is 1 when
/// its center lies within `radius_m` meters of a hotspot acquired inside
/// `window` (all hotspots when `None`). The output has no nodata pixels.
pub fn rasterize_hotspots(
    points: &[Hotspot],
    template: &Grid,
    radius_m: f64,
    window: Option<&DateWindow>,
) -> Result<Grid> {
    if !(radius_m >= 0.0 && radius_m.is_finite()) {
        return Err(Error::InvalidGrid(format!(
            "hotspot radius {radius_m} must be >= 0"
        )));
    }
    let t = template.transform();
    let (w, h) = (template.width(), template.height());
    let scale = GroundScale::for_grid(t, h)?;
    let mut values = vec![0f32; w * h];
    let r2 = radius_m * radius_m;
    // Reach in pixels, padded by one so edge centers are always tested.
    let reach_c = (radius_m / (t.pixel_w * scale.x)).ceil() as i64 + 1;
    let reach_r = (radius_m / (t.pixel_h * scale.y)).ceil() as i64 + 1;

    for p in points {
        if window.is_some_and(|win| !win.contains(p.acq_date)) {
            continue;
        }
        let (x, y) = lonlat_to_map(&t.crs, p.lon, p.lat)?;
        let (pc, pr) = t.pixel_of(x, y);
        let c0 = (pc - reach_c).max(0);
        let c1 = (pc + reach_c).min(w as i64 - 1);
        let r0 = (pr - reach_r).max(0);
        let r1 = (pr + reach_r).min(h as i64 - 1);
        for row in r0..=r1 {
            for col in c0..=c1 {
                let (cx, cy) = t.pixel_center(col, row);
                let dx = (cx - x) * scale.x;
                let dy = (cy - y) * scale.y;
                if dx * dx + dy * dy <= r2 {
                    values[row as usize * w + col as usize] = 1.0;
                }
            }
        }
    }
    Grid::new(w, h, t.clone(), INT_NODATA, values, GridKind::Mask)
}
