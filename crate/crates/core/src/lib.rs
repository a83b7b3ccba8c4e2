//! Burnt-area assessment toolkit: pre/post-fire compositing, NBR/dNBR burn
//! severity mapping, burn-date product decoding, hotspot rasterization and
//! pixelwise agreement metrics over single-band georeferenced grids.

pub mod assessment;
pub mod catalog;
pub mod crs;
pub mod error;
pub mod geotiff;
pub mod preprocess;
pub mod raster;
pub mod reference;
pub mod severity;
pub mod synth;

pub use error::{Error, Result};
