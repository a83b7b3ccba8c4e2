//! Georeferenced single-band grids.
//!
//! Grids are north-up (no rotation or shear), store samples as `f32`
//! regardless of their on-disk encoding, and mark missing samples with a
//! per-grid nodata sentinel. All sampling follows the pixel-center rule: a
//! pixel `(col, row)` represents the point at the center of its cell.

mod clip;
mod exec;
mod resample;
mod roi;

pub use clip::{clip, snap_to_roi};
pub use exec::{Executor, DEFAULT_TILE};
pub use resample::{resample_to, ResampleMethod};
pub use roi::RoiPolygon;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nodata sentinel used for floating-point grids produced by this crate.
pub const FLOAT_NODATA: f32 = -9999.0;
/// Nodata sentinel used for integer-valued grids produced by this crate.
pub const INT_NODATA: f32 = -32768.0;

/// North-up affine georeferencing plus an opaque CRS tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoTransform {
    /// West edge of the grid.
    pub origin_x: f64,
    /// North edge of the grid.
    pub origin_y: f64,
    pub pixel_w: f64,
    /// Pixel height, applied southward.
    pub pixel_h: f64,
    pub crs: String,
}

impl GeoTransform {
    pub fn new(
        origin_x: f64,
        origin_y: f64,
        pixel_w: f64,
        pixel_h: f64,
        crs: impl Into<String>,
    ) -> Result<Self> {
        let t = GeoTransform {
            origin_x,
            origin_y,
            pixel_w,
            pixel_h,
            crs: crs.into(),
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.origin_x.is_finite() && self.origin_y.is_finite()) {
            return Err(Error::InvalidTransform("origin is not finite".into()));
        }
        if !(self.pixel_w.is_finite() && self.pixel_w > 0.0) {
            return Err(Error::InvalidTransform(format!(
                "pixel width must be positive, got {}",
                self.pixel_w
            )));
        }
        if !(self.pixel_h.is_finite() && self.pixel_h > 0.0) {
            return Err(Error::InvalidTransform(format!(
                "pixel height must be positive, got {}",
                self.pixel_h
            )));
        }
        Ok(())
    }

    /// Pixel containing the map point `(x, y)`. May lie outside any grid.
    pub fn pixel_of(&self, x: f64, y: f64) -> (i64, i64) {
        let col = ((x - self.origin_x) / self.pixel_w).floor() as i64;
        let row = ((self.origin_y - y) / self.pixel_h).floor() as i64;
        (col, row)
    }

    /// Map coordinates of the center of pixel `(col, row)`.
    pub fn pixel_center(&self, col: i64, row: i64) -> (f64, f64) {
        (
            self.origin_x + (col as f64 + 0.5) * self.pixel_w,
            self.origin_y - (row as f64 + 0.5) * self.pixel_h,
        )
    }

    /// Extent of a `width` x `height` grid on this transform.
    pub fn bounds(&self, width: usize, height: usize) -> Bounds {
        Bounds {
            min_x: self.origin_x,
            min_y: self.origin_y - height as f64 * self.pixel_h,
            max_x: self.origin_x + width as f64 * self.pixel_w,
            max_y: self.origin_y,
        }
    }

    pub fn ensure_same_crs(&self, other_crs: &str) -> Result<()> {
        if self.crs != other_crs {
            return Err(Error::CrsMismatch {
                left: self.crs.clone(),
                right: other_crs.to_string(),
            });
        }
        Ok(())
    }
}

/// Same as [`GeoTransform::pixel_of`].
pub fn pixel_of(transform: &GeoTransform, x: f64, y: f64) -> (i64, i64) {
    transform.pixel_of(x, y)
}

/// Axis-aligned rectangle in map units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Bounds {
    /// Closed-interval overlap test; touching edges count as intersecting.
    pub fn intersects(&self, other: &Bounds) -> bool {
        self.min_x <= other.max_x
            && other.min_x <= self.max_x
            && self.min_y <= other.max_y
            && other.min_y <= self.max_y
    }

    pub fn center(&self) -> (f64, f64) {
        (
            0.5 * (self.min_x + self.max_x),
            0.5 * (self.min_y + self.max_y),
        )
    }
}

/// What the samples of a grid mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GridKind {
    Reflectance,
    Index,
    Categorical,
    BurnDate,
    Mask,
}

impl GridKind {
    /// Kinds whose samples must be integer valued.
    pub fn is_integer(self) -> bool {
        matches!(
            self,
            GridKind::Categorical | GridKind::BurnDate | GridKind::Mask
        )
    }

    pub fn default_nodata(self) -> f32 {
        if self.is_integer() {
            INT_NODATA
        } else {
            FLOAT_NODATA
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GridKind::Reflectance => "Reflectance",
            GridKind::Index => "Index",
            GridKind::Categorical => "Categorical",
            GridKind::BurnDate => "BurnDate",
            GridKind::Mask => "Mask",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "Reflectance" => GridKind::Reflectance,
            "Index" => GridKind::Index,
            "Categorical" => GridKind::Categorical,
            "BurnDate" => GridKind::BurnDate,
            "Mask" => GridKind::Mask,
            _ => return None,
        })
    }
}

/// Pixel-space sub-rectangle of a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub col_off: usize,
    pub row_off: usize,
    pub width: usize,
    pub height: usize,
}

impl Window {
    pub fn fits(&self, width: usize, height: usize) -> bool {
        self.width > 0
            && self.height > 0
            && self.col_off + self.width <= width
            && self.row_off + self.height <= height
    }
}

/// A single-band georeferenced raster.
#[derive(Debug, Clone)]
pub struct Grid {
    width: usize,
    height: usize,
    transform: GeoTransform,
    nodata: f32,
    values: Vec<f32>,
    kind: GridKind,
}

impl Grid {
    pub fn new(
        width: usize,
        height: usize,
        transform: GeoTransform,
        nodata: f32,
        values: Vec<f32>,
        kind: GridKind,
    ) -> Result<Self> {
        transform.validate()?;
        if width == 0 || height == 0 {
            return Err(Error::InvalidGrid(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        if values.len() != width * height {
            return Err(Error::InvalidGrid(format!(
                "expected {} samples for {width}x{height}, got {}",
                width * height,
                values.len()
            )));
        }
        let grid = Grid {
            width,
            height,
            transform,
            nodata,
            values,
            kind,
        };
        if let Some(i) = grid.values.iter().position(|&v| !grid.sample_ok(v)) {
            return Err(Error::InvalidGrid(format!(
                "sample {} at index {i} is not valid for a {:?} grid",
                grid.values[i], kind
            )));
        }
        Ok(grid)
    }

    /// Grid with every sample set to `value`.
    pub fn filled(
        width: usize,
        height: usize,
        transform: GeoTransform,
        nodata: f32,
        kind: GridKind,
        value: f32,
    ) -> Result<Self> {
        Grid::new(
            width,
            height,
            transform,
            nodata,
            vec![value; width * height],
            kind,
        )
    }

    /// Builds a grid from values already known to satisfy the invariants.
    pub(crate) fn from_parts(
        width: usize,
        height: usize,
        transform: GeoTransform,
        nodata: f32,
        values: Vec<f32>,
        kind: GridKind,
    ) -> Self {
        debug_assert_eq!(values.len(), width * height);
        Grid {
            width,
            height,
            transform,
            nodata,
            values,
            kind,
        }
    }

    fn sample_ok(&self, v: f32) -> bool {
        if self.is_nodata(v) {
            return true;
        }
        v.is_finite() && (!self.kind.is_integer() || v.fract() == 0.0)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn transform(&self) -> &GeoTransform {
        &self.transform
    }

    pub fn crs(&self) -> &str {
        &self.transform.crs
    }

    pub fn nodata(&self) -> f32 {
        self.nodata
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f32> {
        self.values
    }

    #[inline]
    pub fn is_nodata(&self, v: f32) -> bool {
        v == self.nodata || (v.is_nan() && self.nodata.is_nan())
    }

    #[inline]
    pub fn get(&self, col: usize, row: usize) -> f32 {
        self.values[row * self.width + col]
    }

    /// Sample at `(col, row)`, or `None` for nodata and out-of-bounds pixels.
    pub fn value(&self, col: i64, row: i64) -> Option<f32> {
        if col < 0 || row < 0 || col as usize >= self.width || row as usize >= self.height {
            return None;
        }
        let v = self.get(col as usize, row as usize);
        (!self.is_nodata(v)).then_some(v)
    }

    pub fn bounds(&self) -> Bounds {
        self.transform.bounds(self.width, self.height)
    }

    pub fn valid_count(&self) -> usize {
        self.values.iter().filter(|&&v| !self.is_nodata(v)).count()
    }

    /// Same kind, with a new kind tag; fails if samples violate the new kind.
    pub fn with_kind(self, kind: GridKind) -> Result<Self> {
        Grid::new(
            self.width,
            self.height,
            self.transform,
            self.nodata,
            self.values,
            kind,
        )
    }

    /// Same dimensions and transform.
    pub fn is_aligned_with(&self, other: &Grid) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.transform == other.transform
    }

    pub fn ensure_aligned(grids: &[&Grid]) -> Result<()> {
        let Some(first) = grids.first() else {
            return Ok(());
        };
        for g in &grids[1..] {
            if g.crs() != first.crs() {
                return Err(Error::CrsMismatch {
                    left: first.crs().to_string(),
                    right: g.crs().to_string(),
                });
            }
            if !first.is_aligned_with(g) {
                return Err(Error::AlignmentMismatch(format!(
                    "{}x{} at ({}, {}) vs {}x{} at ({}, {})",
                    first.width,
                    first.height,
                    first.transform.origin_x,
                    first.transform.origin_y,
                    g.width,
                    g.height,
                    g.transform.origin_x,
                    g.transform.origin_y
                )));
            }
        }
        Ok(())
    }

    /// Copy of the pixels inside `window`, georeferenced accordingly.
    pub fn subgrid(&self, window: Window) -> Result<Grid> {
        if !window.fits(self.width, self.height) {
            return Err(Error::InvalidGrid(format!(
                "window {window:?} does not fit a {}x{} grid",
                self.width, self.height
            )));
        }
        let mut values = Vec::with_capacity(window.width * window.height);
        for row in window.row_off..window.row_off + window.height {
            let start = row * self.width + window.col_off;
            values.extend_from_slice(&self.values[start..start + window.width]);
        }
        let t = &self.transform;
        let transform = GeoTransform {
            origin_x: t.origin_x + window.col_off as f64 * t.pixel_w,
            origin_y: t.origin_y - window.row_off as f64 * t.pixel_h,
            ..t.clone()
        };
        Ok(Grid::from_parts(
            window.width,
            window.height,
            transform,
            self.nodata,
            values,
            self.kind,
        ))
    }
}

/// Bit-exact comparison: dimensions, georeferencing, kind, nodata and every sample.
impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.transform == other.transform
            && self.kind == other.kind
            && self.nodata.to_bits() == other.nodata.to_bits()
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t10() -> GeoTransform {
        GeoTransform::new(100.0, 50.0, 10.0, 10.0, "EPSG:32648").unwrap()
    }

    #[test]
    fn pixel_of_examples() {
        let t = t10();
        assert_eq!(pixel_of(&t, 100.0, 50.0), (0, 0));
        assert_eq!(pixel_of(&t, 125.0, 35.0), (2, 1));
        assert_eq!(pixel_of(&t, 99.0, 50.0), (-1, 0));
    }

    #[test]
    fn pixel_center_round_trips() {
        let t = GeoTransform::new(103.25, 2.97, 0.000_179_8, 0.000_180_9, "EPSG:4326").unwrap();
        for col in [-3i64, 0, 1, 17, 2047] {
            for row in [-1i64, 0, 5, 999] {
                let (x, y) = t.pixel_center(col, row);
                assert_eq!(t.pixel_of(x, y), (col, row));
            }
        }
    }

    #[test]
    fn rejects_bad_transforms() {
        assert!(GeoTransform::new(0.0, 0.0, 0.0, 1.0, "x").is_err());
        assert!(GeoTransform::new(0.0, 0.0, 1.0, -1.0, "x").is_err());
        assert!(GeoTransform::new(f64::NAN, 0.0, 1.0, 1.0, "x").is_err());
    }

    #[test]
    fn rejects_bad_samples() {
        let t = t10();
        assert!(Grid::new(2, 1, t.clone(), -1.0, vec![0.5, 1.0], GridKind::Categorical).is_err());
        assert!(Grid::new(2, 1, t.clone(), -1.0, vec![f32::NAN, 1.0], GridKind::Index).is_err());
        assert!(Grid::new(2, 2, t.clone(), -1.0, vec![1.0], GridKind::Index).is_err());
        // NaN is allowed when it is the nodata sentinel.
        assert!(Grid::new(1, 1, t, f32::NAN, vec![f32::NAN], GridKind::Index).is_ok());
    }

    #[test]
    fn subgrid_shifts_origin() {
        let t = t10();
        let g = Grid::new(
            3,
            2,
            t,
            -1.0,
            (0..6).map(|v| v as f32).collect(),
            GridKind::Index,
        )
        .unwrap();
        let s = g
            .subgrid(Window {
                col_off: 1,
                row_off: 1,
                width: 2,
                height: 1,
            })
            .unwrap();
        assert_eq!(s.values(), &[4.0, 5.0]);
        assert_eq!(s.transform().origin_x, 110.0);
        assert_eq!(s.transform().origin_y, 40.0);
    }
}
