use serde::{Deserialize, Serialize};

use super::{GeoTransform, Grid};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResampleMethod {
    Nearest,
    Bilinear,
}

/// Offsets closer than this to a whole pixel are snapped, so that pixel
/// centers shared by source and target sample exactly one source pixel.
const SNAP: f64 = 1e-9;

fn snap(v: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() < SNAP {
        r
    } else {
        v
    }
}

/// Resamples `src` onto a `width` x `height` grid with transform `target`.
///
/// Every output pixel samples `src` at its center. Centers outside the
/// source extent become nodata. Bilinear interpolation drops nodata
/// neighbors and renormalizes the remaining weights.
pub fn resample_to(
    src: &Grid,
    target: &GeoTransform,
    width: usize,
    height: usize,
    method: ResampleMethod,
) -> Result<Grid> {
    target.validate()?;
    src.transform().ensure_same_crs(&target.crs)?;
    if method == ResampleMethod::Bilinear && src.kind().is_integer() {
        return Err(Error::MethodKindMismatch(src.kind()));
    }
    if width == 0 || height == 0 {
        return Err(Error::InvalidGrid(
            "target dimensions must be positive".into(),
        ));
    }
    if src.transform() == target && src.width() == width && src.height() == height {
        return Ok(src.clone());
    }

    let st = src.transform();
    let nodata = src.nodata();
    // Fractional source column/row (in pixel units from the source origin)
    // of each target pixel center.
    let xs: Vec<f64> = (0..width)
        .map(|c| {
            snap((target.origin_x + (c as f64 + 0.5) * target.pixel_w - st.origin_x) / st.pixel_w)
        })
        .collect();
    let ys: Vec<f64> = (0..height)
        .map(|r| {
            snap((st.origin_y - (target.origin_y - (r as f64 + 0.5) * target.pixel_h)) / st.pixel_h)
        })
        .collect();
    let (sw, sh) = (src.width() as f64, src.height() as f64);

    let mut out = Vec::with_capacity(width * height);
    for &fy in &ys {
        for &fx in &xs {
            if !(0.0..sw).contains(&fx) || !(0.0..sh).contains(&fy) {
                out.push(nodata);
                continue;
            }
            let v = match method {
                ResampleMethod::Nearest => src.get(fx.floor() as usize, fy.floor() as usize),
                ResampleMethod::Bilinear => bilinear(src, fx - 0.5, fy - 0.5).unwrap_or(nodata),
            };
            out.push(v);
        }
    }
    Ok(Grid::from_parts(
        width,
        height,
        target.clone(),
        nodata,
        out,
        src.kind(),
    ))
}

/// Interpolates between the four pixel centers around `(fx, fy)`, given in
/// pixel-center coordinates (center of pixel `c` is at `c`).
fn bilinear(src: &Grid, fx: f64, fy: f64) -> Option<f32> {
    let fx = snap(fx);
    let fy = snap(fy);
    let c0 = fx.floor();
    let r0 = fy.floor();
    let tx = fx - c0;
    let ty = fy - r0;
    let (c0, r0) = (c0 as i64, r0 as i64);
    let taps = [
        (c0, r0, (1.0 - tx) * (1.0 - ty)),
        (c0 + 1, r0, tx * (1.0 - ty)),
        (c0, r0 + 1, (1.0 - tx) * ty),
        (c0 + 1, r0 + 1, tx * ty),
    ];
    let mut acc = 0.0f64;
    let mut wsum = 0.0f64;
    for (c, r, w) in taps {
        if w == 0.0 {
            continue;
        }
        if let Some(v) = src.value(c, r) {
            acc += w * v as f64;
            wsum += w;
        }
    }
    (wsum > 0.0).then(|| (acc / wsum) as f32)
}
