use super::{GeoTransform, Grid, RoiPolygon, Window};
use crate::error::{Error, Result};

const EDGE_EPS: f64 = 1e-9;

/// Pixel window of `grid` covering `roi`'s bounding box, snapped outward to
/// the grid lattice and intersected with the grid extent.
pub(crate) fn roi_window(grid: &Grid, roi: &RoiPolygon) -> Option<Window> {
    let t = grid.transform();
    let b = roi.bbox();
    let c0 = ((b.min_x - t.origin_x) / t.pixel_w + EDGE_EPS).floor();
    let c1 = ((b.max_x - t.origin_x) / t.pixel_w - EDGE_EPS).ceil();
    let r0 = ((t.origin_y - b.max_y) / t.pixel_h + EDGE_EPS).floor();
    let r1 = ((t.origin_y - b.min_y) / t.pixel_h - EDGE_EPS).ceil();
    let c0 = c0.max(0.0) as i64;
    let r0 = r0.max(0.0) as i64;
    let c1 = (c1 as i64).min(grid.width() as i64);
    let r1 = (r1 as i64).min(grid.height() as i64);
    (c1 > c0 && r1 > r0).then(|| Window {
        col_off: c0 as usize,
        row_off: r0 as usize,
        width: (c1 - c0) as usize,
        height: (r1 - r0) as usize,
    })
}

/// Lattice of `transform` snapped outward to the ROI bounding box, not
/// limited to any grid extent. Returns the new transform and dimensions.
pub fn snap_to_roi(transform: &GeoTransform, roi: &RoiPolygon) -> (GeoTransform, usize, usize) {
    let t = transform;
    let b = roi.bbox();
    let c0 = ((b.min_x - t.origin_x) / t.pixel_w + EDGE_EPS).floor();
    let c1 = ((b.max_x - t.origin_x) / t.pixel_w - EDGE_EPS).ceil();
    let r0 = ((t.origin_y - b.max_y) / t.pixel_h + EDGE_EPS).floor();
    let r1 = ((t.origin_y - b.min_y) / t.pixel_h - EDGE_EPS).ceil();
    let snapped = GeoTransform {
        origin_x: t.origin_x + c0 * t.pixel_w,
        origin_y: t.origin_y - r0 * t.pixel_h,
        ..t.clone()
    };
    (
        snapped,
        (c1 - c0).max(1.0) as usize,
        (r1 - r0).max(1.0) as usize,
    )
}

/// Crops `src` to the ROI bounding box and sets pixels whose centers fall
/// outside the polygon to nodata.
pub fn clip(src: &Grid, roi: &RoiPolygon) -> Result<Grid> {
    src.transform().ensure_same_crs(roi.crs())?;
    let window = roi_window(src, roi).ok_or(Error::EmptyIntersection)?;
    let sub = src.subgrid(window)?;
    let t = sub.transform().clone();
    let nodata = sub.nodata();
    let (w, kind) = (sub.width(), sub.kind());
    let h = sub.height();
    let mut values = sub.into_values();
    for row in 0..h {
        for col in 0..w {
            let (x, y) = t.pixel_center(col as i64, row as i64);
            if !roi.contains(x, y) {
                values[row * w + col] = nodata;
            }
        }
    }
    Ok(Grid::from_parts(w, h, t, nodata, values, kind))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::{Bounds, GeoTransform, GridKind};

    fn grid4() -> Grid {
        let t = GeoTransform::new(0.0, 4.0, 1.0, 1.0, "EPSG:32648").unwrap();
        Grid::new(
            4,
            4,
            t,
            -1.0,
            (0..16).map(|v| v as f32).collect(),
            GridKind::Index,
        )
        .unwrap()
    }

    #[test]
    fn clip_to_full_extent_is_identity() {
        let g = grid4();
        let roi = RoiPolygon::rectangle("EPSG:32648", g.bounds()).unwrap();
        assert_eq!(clip(&g, &roi).unwrap(), g);
    }

    #[test]
    fn west_half() {
        let g = grid4();
        let roi = RoiPolygon::rectangle(
            "EPSG:32648",
            Bounds {
                min_x: 0.0,
                min_y: 0.0,
                max_x: 2.0,
                max_y: 4.0,
            },
        )
        .unwrap();
        let c = clip(&g, &roi).unwrap();
        assert_eq!((c.width(), c.height()), (2, 4));
        assert_eq!(c.values(), &[0.0, 1.0, 4.0, 5.0, 8.0, 9.0, 12.0, 13.0]);
    }

    #[test]
    fn disjoint_roi() {
        let g = grid4();
        let roi = RoiPolygon::rectangle(
            "EPSG:32648",
            Bounds {
                min_x: 10.0,
                min_y: 10.0,
                max_x: 12.0,
                max_y: 12.0,
            },
        )
        .unwrap();
        assert!(matches!(clip(&g, &roi), Err(Error::EmptyIntersection)));
        let wrong_crs = RoiPolygon::rectangle("EPSG:4326", g.bounds()).unwrap();
        assert!(matches!(
            clip(&g, &wrong_crs),
            Err(Error::CrsMismatch { .. })
        ));
    }
}
