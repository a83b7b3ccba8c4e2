//! Normalized Burn Ratio, its pre/post difference, and severity classes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::crs;
use crate::error::{Error, Result};
use crate::raster::{Executor, Grid, GridKind, FLOAT_NODATA, INT_NODATA};

/// Aligned near-infrared and shortwave-infrared (~2.2 µm) reflectance.
#[derive(Debug, Clone, Copy)]
pub struct BandPair<'a> {
    pub nir: &'a Grid,
    pub swir2: &'a Grid,
}

/// `(nir - swir2) / (nir + swir2)`. Nodata where either input is nodata or
/// the denominator is zero.
pub fn nbr(bands: BandPair<'_>, exec: &Executor) -> Result<Grid> {
    let BandPair { nir, swir2 } = bands;
    exec.map_tiled(&[nir, swir2], GridKind::Index, FLOAT_NODATA, |s| {
        if nir.is_nodata(s[0]) || swir2.is_nodata(s[1]) {
            return FLOAT_NODATA;
        }
        nbr_value(s[0], s[1]).unwrap_or(FLOAT_NODATA)
    })
}

/// Scalar NBR, evaluated in double precision.
pub fn nbr_value(nir: f32, swir2: f32) -> Option<f32> {
    let (n, s) = (nir as f64, swir2 as f64);
    let den = n + s;
    if den == 0.0 || !den.is_finite() {
        return None;
    }
    let v = (n - s) / den;
    v.is_finite().then_some(v as f32)
}

/// `pre - post`, nodata where either side is nodata.
pub fn dnbr(pre: &Grid, post: &Grid, exec: &Executor) -> Result<Grid> {
    exec.map_tiled(&[pre, post], GridKind::Index, FLOAT_NODATA, |s| {
        if pre.is_nodata(s[0]) || post.is_nodata(s[1]) {
            FLOAT_NODATA
        } else {
            s[0] - s[1]
        }
    })
}

/// Burn severity levels, ordered from strongest regrowth to highest severity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SeverityClass {
    RegrowthHigh,
    RegrowthLow,
    Unburned,
    LowSeverity,
    ModerateLowSeverity,
    ModerateHighSeverity,
    HighSeverity,
}

impl SeverityClass {
    pub const ALL: [SeverityClass; 7] = [
        SeverityClass::RegrowthHigh,
        SeverityClass::RegrowthLow,
        SeverityClass::Unburned,
        SeverityClass::LowSeverity,
        SeverityClass::ModerateLowSeverity,
        SeverityClass::ModerateHighSeverity,
        SeverityClass::HighSeverity,
    ];

    pub fn rank(self) -> u8 {
        self as u8
    }

    pub fn from_rank(rank: u8) -> Option<Self> {
        Self::ALL.get(rank as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            SeverityClass::RegrowthHigh => "RegrowthHigh",
            SeverityClass::RegrowthLow => "RegrowthLow",
            SeverityClass::Unburned => "Unburned",
            SeverityClass::LowSeverity => "LowSeverity",
            SeverityClass::ModerateLowSeverity => "ModerateLowSeverity",
            SeverityClass::ModerateHighSeverity => "ModerateHighSeverity",
            SeverityClass::HighSeverity => "HighSeverity",
        }
    }

    /// Quicklook color as RGB.
    pub fn color(self) -> [u8; 3] {
        match self {
            SeverityClass::RegrowthHigh => [0x7A, 0x87, 0x37],
            SeverityClass::RegrowthLow => [0xAC, 0xBE, 0x4D],
            SeverityClass::Unburned => [0x0A, 0xE0, 0x42],
            SeverityClass::LowSeverity => [0xFF, 0xF7, 0x0B],
            SeverityClass::ModerateLowSeverity => [0xFF, 0xAF, 0x38],
            SeverityClass::ModerateHighSeverity => [0xFF, 0x64, 0x1B],
            SeverityClass::HighSeverity => [0xA4, 0x1F, 0xD6],
        }
    }
}

impl fmt::Display for SeverityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SeverityClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidThresholds(format!("unknown severity class {s:?}")))
    }
}

/// Six ascending dNBR cut points separating the seven classes. Each class
/// interval includes its lower bound and excludes its upper bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct SeverityThresholds([f64; 6]);

impl Default for SeverityThresholds {
    fn default() -> Self {
        SeverityThresholds([-0.25, -0.10, 0.10, 0.27, 0.44, 0.66])
    }
}

impl<'de> Deserialize<'de> for SeverityThresholds {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let t = <[f64; 6]>::deserialize(d)?;
        SeverityThresholds::new(t).map_err(serde::de::Error::custom)
    }
}

impl SeverityThresholds {
    pub fn new(t: [f64; 6]) -> Result<Self> {
        if t.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidThresholds("thresholds must be finite".into()));
        }
        // Strictly ascending after rounding to the comparison precision.
        if t.windows(2).any(|w| (w[0] as f32) >= (w[1] as f32)) {
            return Err(Error::InvalidThresholds(format!(
                "thresholds must be strictly ascending: {t:?}"
            )));
        }
        Ok(SeverityThresholds(t))
    }

    pub fn values(&self) -> [f64; 6] {
        self.0
    }

    /// Class of a dNBR sample. Comparisons happen at `f32` precision, the
    /// precision dNBR grids are stored in, so a sample equal to the
    /// single-precision rounding of a cut point lands in the upper class.
    pub fn class_of(&self, dnbr: f32) -> SeverityClass {
        let rank = self.0.iter().take_while(|&&t| dnbr >= t as f32).count();
        SeverityClass::ALL[rank]
    }
}

/// Maps dNBR to class ranks 0..=6 (Categorical). Nodata in gives nodata out.
pub fn classify(dnbr: &Grid, thresholds: &SeverityThresholds, exec: &Executor) -> Result<Grid> {
    let nodata = INT_NODATA;
    exec.map_tiled(&[dnbr], GridKind::Categorical, nodata, |s| {
        if dnbr.is_nodata(s[0]) || s[0].is_nan() {
            nodata
        } else {
            thresholds.class_of(s[0]).rank() as f32
        }
    })
}

/// Hectares covered by pixels of `classified` with rank at least `min_class`.
pub fn burned_area(classified: &Grid, min_class: SeverityClass, exec: &Executor) -> Result<f64> {
    let min = min_class.rank() as f32;
    let count = exec.fold_tiled(
        &[classified],
        || 0u64,
        |acc, s| {
            if !classified.is_nodata(s[0]) && s[0] >= min {
                *acc += 1;
            }
        },
        |a, b| a + b,
    )?;
    pixel_hectares(classified).map(|ha| count as f64 * ha)
}

/// Ground area of one pixel of `grid` in hectares.
pub fn pixel_hectares(grid: &Grid) -> Result<f64> {
    Ok(crs::pixel_area_m2(grid.transform(), grid.height())? / 10_000.0)
}
