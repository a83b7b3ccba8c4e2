use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the burnscan library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("CRS mismatch: {left} vs {right}")]
    CrsMismatch { left: String, right: String },

    #[error("grids are not aligned: {0}")]
    AlignmentMismatch(String),

    #[error("bilinear resampling is not defined for {0:?} grids")]
    MethodKindMismatch(crate::raster::GridKind),

    #[error("region of interest does not intersect the grid")]
    EmptyIntersection,

    #[error("invalid geotransform: {0}")]
    InvalidTransform(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),

    #[error("CRS `{0}` has no known linear or angular units")]
    UnknownUnits(String),

    #[error("invalid date window: {0}")]
    InvalidWindow(String),

    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("invalid metadata for scene `{scene_id}`: {reason}")]
    InvalidMeta { scene_id: String, reason: String },

    #[error("no burnt-area product covers {0}")]
    NoSuitableProduct(String),

    #[error("scene `{scene_id}` has no band `{band}`")]
    MissingBand { scene_id: String, band: String },

    #[error("unsupported TIFF {path}: {reason}")]
    UnsupportedTiff { path: PathBuf, reason: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("no scenes survive filtering for window {0}")]
    NoScenesInWindow(String),

    #[error("image stack is empty")]
    EmptyStack,

    #[error("invalid mask policy: {0}")]
    InvalidPolicy(String),

    #[error("invalid severity thresholds: {0}")]
    InvalidThresholds(String),

    #[error("date window {start} .. {end} crosses a calendar year; split it per year")]
    CrossYearWindow {
        start: chrono::NaiveDate,
        end: chrono::NaiveDate,
    },

    #[error("invalid coordinate on data row {row}: {reason}")]
    InvalidCoordinate { row: usize, reason: String },

    #[error("confusion matrix has no co-valid pixels")]
    EmptyMatrix,

    #[error("invalid synthetic scene spec: {0}")]
    InvalidSpec(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.to_string(),
        }
    }
}
