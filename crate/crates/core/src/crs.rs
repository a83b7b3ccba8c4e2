//! Units of CRS tags and the small amount of geodesy the pipeline needs.
//!
//! CRS tags are opaque strings; only the unit family is inferred from them.
//! Geographic grids use a flat-earth approximation evaluated at the grid's
//! center latitude for both pixel areas and point distances.

use crate::error::{Error, Result};
use crate::raster::GeoTransform;

/// Meters per degree of longitude at the equator.
pub const M_PER_DEG_LON: f64 = 111_320.0;
/// Meters per degree of latitude.
pub const M_PER_DEG_LAT: f64 = 110_540.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrsUnits {
    Degrees,
    Meters,
}

fn epsg_code(crs: &str) -> Option<u32> {
    let code = crs
        .strip_prefix("EPSG:")
        .or_else(|| crs.strip_prefix("epsg:"))?;
    code.trim().parse().ok()
}

/// Unit family of a CRS tag.
///
/// Recognized: `EPSG:4xxx` and `OGC:CRS84` (degrees); UTM zones
/// `EPSG:326xx`/`EPSG:327xx` and `EPSG:3857` (meters).
pub fn crs_units(crs: &str) -> Result<CrsUnits> {
    if matches!(crs, "OGC:CRS84" | "CRS84") {
        return Ok(CrsUnits::Degrees);
    }
    match epsg_code(crs) {
        Some(4000..=4999) => Ok(CrsUnits::Degrees),
        Some(32601..=32660 | 32701..=32760 | 3857) => Ok(CrsUnits::Meters),
        _ => Err(Error::UnknownUnits(crs.to_string())),
    }
}

/// Meters per map unit along x and y for a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundScale {
    pub x: f64,
    pub y: f64,
}

impl GroundScale {
    /// Scale for a grid of `height` rows on `transform`; geographic grids are
    /// evaluated at the latitude of the grid center.
    pub fn for_grid(transform: &GeoTransform, height: usize) -> Result<Self> {
        match crs_units(&transform.crs)? {
            CrsUnits::Meters => Ok(GroundScale { x: 1.0, y: 1.0 }),
            CrsUnits::Degrees => {
                let lat_center = transform.origin_y - 0.5 * height as f64 * transform.pixel_h;
                Ok(GroundScale {
                    x: M_PER_DEG_LON * lat_center.to_radians().cos(),
                    y: M_PER_DEG_LAT,
                })
            }
        }
    }
}

/// Ground area of one pixel in square meters.
pub fn pixel_area_m2(transform: &GeoTransform, height: usize) -> Result<f64> {
    let s = GroundScale::for_grid(transform, height)?;
    Ok(transform.pixel_w * s.x * transform.pixel_h * s.y)
}

/// Converts a WGS84 longitude/latitude to map coordinates of `crs`.
pub fn lonlat_to_map(crs: &str, lon: f64, lat: f64) -> Result<(f64, f64)> {
    if crs_units(crs)? == CrsUnits::Degrees {
        return Ok((lon, lat));
    }
    match epsg_code(crs) {
        Some(3857) => {
            const R: f64 = 6_378_137.0;
            let x = R * lon.to_radians();
            let y = R
                * (std::f64::consts::FRAC_PI_4 + lat.to_radians() / 2.0)
                    .tan()
                    .ln();
            Ok((x, y))
        }
        Some(code @ 32601..=32660) => Ok(utm_forward(lon, lat, code - 32600, false)),
        Some(code @ 32701..=32760) => Ok(utm_forward(lon, lat, code - 32700, true)),
        _ => Err(Error::UnknownUnits(crs.to_string())),
    }
}

/// WGS84 transverse Mercator forward projection for a UTM zone.
fn utm_forward(lon: f64, lat: f64, zone: u32, south: bool) -> (f64, f64) {
    const A: f64 = 6_378_137.0;
    const F: f64 = 1.0 / 298.257_223_563;
    const K0: f64 = 0.9996;
    let e2 = F * (2.0 - F);
    let ep2 = e2 / (1.0 - e2);
    let lon0 = (zone as f64 * 6.0 - 183.0).to_radians();
    let phi = lat.to_radians();
    let lam = lon.to_radians();

    let (s, c) = phi.sin_cos();
    let t = s / c;
    let n = A / (1.0 - e2 * s * s).sqrt();
    let tt = t * t;
    let cc = ep2 * c * c;
    let aa = c * (lam - lon0);
    let e4 = e2 * e2;
    let e6 = e4 * e2;
    let m = A
        * ((1.0 - e2 / 4.0 - 3.0 * e4 / 64.0 - 5.0 * e6 / 256.0) * phi
            - (3.0 * e2 / 8.0 + 3.0 * e4 / 32.0 + 45.0 * e6 / 1024.0) * (2.0 * phi).sin()
            + (15.0 * e4 / 256.0 + 45.0 * e6 / 1024.0) * (4.0 * phi).sin()
            - (35.0 * e6 / 3072.0) * (6.0 * phi).sin());

    let x = K0
        * n
        * (aa
            + (1.0 - tt + cc) * aa.powi(3) / 6.0
            + (5.0 - 18.0 * tt + tt * tt + 72.0 * cc - 58.0 * ep2) * aa.powi(5) / 120.0)
        + 500_000.0;
    let mut y = K0
        * (m + n
            * t
            * (aa * aa / 2.0
                + (5.0 - tt + 9.0 * cc + 4.0 * cc * cc) * aa.powi(4) / 24.0
                + (61.0 - 58.0 * tt + tt * tt + 600.0 * cc - 330.0 * ep2) * aa.powi(6) / 720.0));
    if south {
        y += 10_000_000.0;
    }
    (x, y)
}
