//! PNG quicklooks: the severity palette map and the reference overlay.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use burnscan_core::raster::Grid;
use burnscan_core::severity::SeverityClass;

use crate::error::CliError;

/// Reflectance mapped to full brightness in the false-color background.
const STRETCH_MAX: f32 = 0.5;
const BURN_RED: [u8; 3] = [255, 0, 0];
const HOTSPOT_YELLOW: [u8; 3] = [255, 230, 0];

/// RGBA pixels for a classified grid; nodata and unknown codes are
/// transparent.
pub fn severity_rgba(classes: &Grid) -> Vec<u8> {
    let mut out = Vec::with_capacity(classes.len() * 4);
    for &v in classes.values() {
        let class = (!classes.is_nodata(v) && v >= 0.0 && v.fract() == 0.0)
            .then(|| SeverityClass::from_rank(v as u8))
            .flatten();
        match class {
            Some(c) => {
                out.extend_from_slice(&c.color());
                out.push(255);
            }
            None => out.extend_from_slice(&[0, 0, 0, 0]),
        }
    }
    out
}

/// Layers drawn by [`overlay_rgba`]; all grids share one lattice.
pub struct OverlayLayers<'a> {
    pub nir: &'a Grid,
    pub swir2: &'a Grid,
    /// Burned mask drawn as 50 % red.
    pub burned: &'a Grid,
    /// Hotspot disc mask; only disc outlines are drawn.
    pub hotspots: &'a Grid,
}

/// Post-fire false color (R = SWIR2, G = NIR, B = NIR / 2) with the burned
/// mask blended in red and hotspot disc outlines in yellow.
pub fn overlay_rgba(layers: &OverlayLayers<'_>) -> Result<Vec<u8>, CliError> {
    let OverlayLayers {
        nir,
        swir2,
        burned,
        hotspots,
    } = *layers;
    Grid::ensure_aligned(&[nir, swir2, burned, hotspots])?;
    let (w, h) = (nir.width(), nir.height());
    let stretch = |v: f32| ((v / STRETCH_MAX).clamp(0.0, 1.0) * 255.0).round() as u8;
    let on = |g: &Grid, c: usize, r: usize| {
        let v = g.get(c, r);
        !g.is_nodata(v) && v == 1.0
    };
    let mut out = Vec::with_capacity(w * h * 4);
    for r in 0..h {
        for c in 0..w {
            let (n, s) = (nir.get(c, r), swir2.get(c, r));
            let valid = !nir.is_nodata(n) && !swir2.is_nodata(s);
            let mut px = if valid {
                [stretch(s), stretch(n), stretch(n * 0.5), 255]
            } else {
                [0, 0, 0, 0]
            };
            if on(burned, c, r) {
                for (p, &red) in px.iter_mut().zip(&BURN_RED) {
                    *p = ((*p as u16 + red as u16) / 2) as u8;
                }
                px[3] = 255;
            }
            if on(hotspots, c, r) {
                let edge = c == 0
                    || r == 0
                    || c + 1 == w
                    || r + 1 == h
                    || !on(hotspots, c - 1, r)
                    || !on(hotspots, c + 1, r)
                    || !on(hotspots, c, r - 1)
                    || !on(hotspots, c, r + 1);
                if edge {
                    px = [HOTSPOT_YELLOW[0], HOTSPOT_YELLOW[1], HOTSPOT_YELLOW[2], 255];
                }
            }
            out.extend_from_slice(&px);
        }
    }
    Ok(out)
}

/// Writes 8-bit RGBA pixels as a PNG.
pub fn write_png(path: &Path, width: usize, height: usize, rgba: &[u8]) -> Result<(), CliError> {
    let file = File::create(path)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", path.display())))?;
    let mut enc = png::Encoder::new(BufWriter::new(file), width as u32, height as u32);
    enc.set_color(png::ColorType::Rgba);
    enc.set_depth(png::BitDepth::Eight);
    enc.set_compression(png::Compression::Fast);
    let png_err = |e: png::EncodingError| CliError::Data(format!("{}: {e}", path.display()));
    let mut writer = enc.write_header().map_err(png_err)?;
    writer.write_image_data(rgba).map_err(png_err)?;
    writer.finish().map_err(png_err)
}

pub fn write_severity_png(path: &Path, classes: &Grid) -> Result<(), CliError> {
    write_png(
        path,
        classes.width(),
        classes.height(),
        &severity_rgba(classes),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use burnscan_core::raster::{GeoTransform, GridKind, INT_NODATA};

    #[test]
    fn palette_and_transparency() {
        let t = GeoTransform::new(0.0, 0.0, 1.0, 1.0, "EPSG:32648").unwrap();
        let g = Grid::new(
            3,
            1,
            t,
            INT_NODATA,
            vec![0.0, 6.0, INT_NODATA],
            GridKind::Categorical,
        )
        .unwrap();
        let px = severity_rgba(&g);
        assert_eq!(&px[0..4], &[0x7A, 0x87, 0x37, 255]);
        assert_eq!(&px[4..8], &[0xA4, 0x1F, 0xD6, 255]);
        assert_eq!(px[11], 0);
    }
}
