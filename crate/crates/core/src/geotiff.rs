//! Single-band GeoTIFF subset.
//!
//! Reading accepts classic (non-Big) TIFF with one uint16, int16 or float32
//! sample per pixel, strip or tile layout, and no or deflate compression.
//! Georeferencing comes from ModelPixelScale + ModelTiepoint, the CRS from
//! the GeoKey directory, and nodata from the GDAL_NODATA tag.
//!
//! Writing always produces little-endian, deflate-compressed 256x256 tiles,
//! float32 for continuous grids and int16 for integer grids.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use flate2::write::ZlibEncoder;
use flate2::Compression;
use tiff::decoder::{Decoder, DecodingResult, Limits};
use tiff::tags::Tag;

use crate::error::{Error, Result};
use crate::raster::{GeoTransform, Grid, GridKind};

const TAG_MODEL_PIXEL_SCALE: u16 = 33550;
const TAG_MODEL_TIEPOINT: u16 = 33922;
const TAG_MODEL_TRANSFORMATION: u16 = 34264;
const TAG_GEO_KEY_DIRECTORY: u16 = 34735;
const TAG_GEO_ASCII_PARAMS: u16 = 34737;
const TAG_GDAL_NODATA: u16 = 42113;

const KEY_MODEL_TYPE: u16 = 1024;
const KEY_RASTER_TYPE: u16 = 1025;
const KEY_CITATION: u16 = 1026;
const KEY_GEOGRAPHIC_TYPE: u16 = 2048;
const KEY_PROJECTED_CS_TYPE: u16 = 3072;
const USER_DEFINED: u16 = 32767;

const TILE: usize = 256;
const KIND_PREFIX: &str = "burnscan:kind=";

/// On-disk sample encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleType {
    U16,
    I16,
    F32,
}

impl SampleType {
    pub fn is_integer(self) -> bool {
        !matches!(self, SampleType::F32)
    }
}

/// Header-level description of a GeoTIFF.
#[derive(Debug, Clone, PartialEq)]
pub struct TiffInfo {
    pub width: usize,
    pub height: usize,
    pub transform: GeoTransform,
    pub sample_type: SampleType,
    pub nodata: Option<f32>,
    /// Grid kind recorded by this crate's writer, if any.
    pub kind: Option<GridKind>,
}

/// Decoded samples widened to `f32`, before any scaling.
#[derive(Debug, Clone)]
pub struct RawRaster {
    pub info: TiffInfo,
    pub samples: Vec<f32>,
}

fn unsupported(path: &Path, reason: impl Into<String>) -> Error {
    Error::UnsupportedTiff {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn open_decoder(path: &Path) -> Result<Decoder<BufReader<File>>> {
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut magic = [0u8; 4];
    file.read_exact(&mut magic)
        .map_err(|_| unsupported(path, "file too short for a TIFF header"))?;
    match magic {
        [b'I', b'I', 42, 0] | [b'M', b'M', 0, 42] => {}
        [b'I', b'I', 43, 0] | [b'M', b'M', 0, 43] => return Err(unsupported(path, "BigTIFF")),
        _ => return Err(unsupported(path, "not a TIFF file")),
    }
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let decoder = Decoder::new(BufReader::new(file))
        .map_err(|e| unsupported(path, e.to_string()))?
        .with_limits(Limits::unlimited());
    Ok(decoder)
}

fn read_header(path: &Path, dec: &mut Decoder<BufReader<File>>) -> Result<TiffInfo> {
    let tiff_err = |e: tiff::TiffError| unsupported(path, e.to_string());
    let (w, h) = dec.dimensions().map_err(tiff_err)?;

    let spp = dec
        .find_tag_unsigned::<u16>(Tag::SamplesPerPixel)
        .map_err(tiff_err)?
        .unwrap_or(1);
    if spp != 1 {
        return Err(unsupported(path, format!("{spp} samples per pixel")));
    }
    let bits = dec
        .find_tag_unsigned_vec::<u16>(Tag::BitsPerSample)
        .map_err(tiff_err)?
        .and_then(|v| v.first().copied())
        .unwrap_or(1);
    let format = dec
        .find_tag_unsigned_vec::<u16>(Tag::SampleFormat)
        .map_err(tiff_err)?
        .and_then(|v| v.first().copied())
        .unwrap_or(1);
    let sample_type = match (bits, format) {
        (16, 1) => SampleType::U16,
        (16, 2) => SampleType::I16,
        (32, 3) => SampleType::F32,
        _ => {
            return Err(unsupported(
                path,
                format!("sample format {format} with {bits} bits"),
            ))
        }
    };
    let compression = dec
        .find_tag_unsigned::<u16>(Tag::Compression)
        .map_err(tiff_err)?
        .unwrap_or(1);
    if !matches!(compression, 1 | 8 | 32946) {
        return Err(unsupported(path, format!("compression {compression}")));
    }
    let predictor = dec
        .find_tag_unsigned::<u16>(Tag::Predictor)
        .map_err(tiff_err)?
        .unwrap_or(1);
    if predictor != 1 {
        return Err(unsupported(path, format!("predictor {predictor}")));
    }
    if dec
        .find_tag(Tag::Unknown(TAG_MODEL_TRANSFORMATION))
        .map_err(tiff_err)?
        .is_some()
    {
        return Err(unsupported(
            path,
            "ModelTransformation (rotated or sheared rasters are not supported)",
        ));
    }

    let scale = dec
        .find_tag(Tag::Unknown(TAG_MODEL_PIXEL_SCALE))
        .map_err(tiff_err)?
        .ok_or_else(|| unsupported(path, "missing ModelPixelScale"))?
        .into_f64_vec()
        .map_err(tiff_err)?;
    let tie = dec
        .find_tag(Tag::Unknown(TAG_MODEL_TIEPOINT))
        .map_err(tiff_err)?
        .ok_or_else(|| unsupported(path, "missing ModelTiepoint"))?
        .into_f64_vec()
        .map_err(tiff_err)?;
    if scale.len() < 2 || tie.len() < 6 {
        return Err(unsupported(path, "short georeferencing tags"));
    }
    if tie.len() > 6 {
        return Err(unsupported(path, "multiple tiepoints"));
    }

    let keys = dec
        .find_tag(Tag::Unknown(TAG_GEO_KEY_DIRECTORY))
        .map_err(tiff_err)?
        .map(|v| v.into_u16_vec())
        .transpose()
        .map_err(tiff_err)?
        .unwrap_or_default();
    let ascii = dec
        .find_tag(Tag::Unknown(TAG_GEO_ASCII_PARAMS))
        .map_err(tiff_err)?
        .map(|v| v.into_string())
        .transpose()
        .map_err(tiff_err)?
        .unwrap_or_default();
    let geo = GeoKeys::parse(&keys, &ascii);

    let (mut origin_x, mut origin_y) = (tie[3] - tie[0] * scale[0], tie[4] + tie[1] * scale[1]);
    if geo.raster_type == Some(2) {
        // PixelIsPoint: tiepoints refer to pixel centers.
        origin_x -= 0.5 * scale[0];
        origin_y += 0.5 * scale[1];
    }
    let transform = GeoTransform::new(origin_x, origin_y, scale[0], scale[1], geo.crs())
        .map_err(|e| unsupported(path, e.to_string()))?;

    let nodata = dec
        .find_tag(Tag::Unknown(TAG_GDAL_NODATA))
        .map_err(tiff_err)?
        .map(|v| v.into_string())
        .transpose()
        .map_err(tiff_err)?
        .map(|s| parse_nodata(&s).ok_or_else(|| unsupported(path, format!("GDAL_NODATA `{s}`"))))
        .transpose()?;

    let kind = dec
        .find_tag(Tag::ImageDescription)
        .map_err(tiff_err)?
        .and_then(|v| v.into_string().ok())
        .and_then(|d| {
            d.trim_end_matches('\0')
                .strip_prefix(KIND_PREFIX)
                .and_then(GridKind::from_name)
        });

    Ok(TiffInfo {
        width: w as usize,
        height: h as usize,
        transform,
        sample_type,
        nodata,
        kind,
    })
}

fn parse_nodata(s: &str) -> Option<f32> {
    let s = s.trim_matches(|c: char| c == '\0' || c.is_whitespace());
    if s.eq_ignore_ascii_case("nan") {
        return Some(f32::NAN);
    }
    s.parse::<f32>()
        .ok()
        .or_else(|| s.parse::<f64>().ok().map(|v| v as f32))
}

#[derive(Debug, Default)]
struct GeoKeys {
    raster_type: Option<u16>,
    epsg: Option<u16>,
    citation: Option<String>,
}

impl GeoKeys {
    fn parse(dir: &[u16], ascii: &str) -> Self {
        let mut keys = GeoKeys::default();
        if dir.len() < 4 {
            return keys;
        }
        let n = dir[3] as usize;
        for entry in dir[4..].chunks_exact(4).take(n) {
            let (id, loc, count, value) = (entry[0], entry[1], entry[2], entry[3]);
            match (id, loc) {
                (KEY_RASTER_TYPE, 0) => keys.raster_type = Some(value),
                (KEY_GEOGRAPHIC_TYPE | KEY_PROJECTED_CS_TYPE, 0) if value != USER_DEFINED => {
                    // A projected code wins over the underlying geographic one.
                    if id == KEY_PROJECTED_CS_TYPE || keys.epsg.is_none() {
                        keys.epsg = Some(value);
                    }
                }
                (KEY_CITATION, TAG_GEO_ASCII_PARAMS) => {
                    let start = value as usize;
                    let end = (start + count as usize).min(ascii.len());
                    if start < end {
                        let s = ascii[start..end].trim_end_matches(['|', '\0']);
                        keys.citation = Some(s.to_string());
                    }
                }
                _ => {}
            }
        }
        keys
    }

    fn crs(&self) -> String {
        match (&self.epsg, &self.citation) {
            (Some(code), _) => format!("EPSG:{code}"),
            (None, Some(c)) => c.clone(),
            (None, None) => "unknown".to_string(),
        }
    }
}

/// Reads only the header of a GeoTIFF.
pub fn read_info(path: impl AsRef<Path>) -> Result<TiffInfo> {
    let path = path.as_ref();
    let mut dec = open_decoder(path)?;
    read_header(path, &mut dec)
}

/// Decodes all samples of a GeoTIFF without scaling.
pub fn read_raw(path: impl AsRef<Path>) -> Result<RawRaster> {
    let path = path.as_ref();
    let mut dec = open_decoder(path)?;
    let info = read_header(path, &mut dec)?;
    let image = dec
        .read_image()
        .map_err(|e| unsupported(path, e.to_string()))?;
    let samples: Vec<f32> = match image {
        DecodingResult::U16(v) => v.into_iter().map(f32::from).collect(),
        DecodingResult::I16(v) => v.into_iter().map(f32::from).collect(),
        DecodingResult::F32(v) => v,
        _ => return Err(unsupported(path, "unexpected decoded sample type")),
    };
    if samples.len() != info.width * info.height {
        return Err(unsupported(
            path,
            "decoded sample count does not match dimensions",
        ));
    }
    Ok(RawRaster { info, samples })
}

/// Reads a GeoTIFF as a grid, keeping raw sample values.
///
/// The kind comes from the description written by [`write_geotiff`] when
/// present; otherwise float files load as `Index` and integer files as
/// `Categorical`. Non-finite samples become nodata.
pub fn read_grid(path: impl AsRef<Path>) -> Result<Grid> {
    let path = path.as_ref();
    let raw = read_raw(path)?;
    let kind = raw
        .info
        .kind
        .unwrap_or(if raw.info.sample_type.is_integer() {
            GridKind::Categorical
        } else {
            GridKind::Index
        });
    raw.into_grid(kind, 1.0)
        .map_err(|e| unsupported(path, e.to_string()))
}

impl RawRaster {
    /// Builds a grid, multiplying integer samples by `scale`. File nodata
    /// maps to the grid nodata; scaled grids use the kind's default nodata.
    pub fn into_grid(self, kind: GridKind, scale: f64) -> Result<Grid> {
        let info = self.info;
        let scaled = info.sample_type.is_integer() && scale != 1.0;
        let file_nodata = info.nodata;
        let nodata = match (scaled, file_nodata) {
            (false, Some(nd)) => nd,
            _ => kind.default_nodata(),
        };
        let is_file_nodata =
            |v: f32| file_nodata.is_some_and(|nd| v == nd || (v.is_nan() && nd.is_nan()));
        let values = self
            .samples
            .into_iter()
            .map(|v| {
                if is_file_nodata(v) || !v.is_finite() {
                    nodata
                } else if scaled {
                    (v as f64 * scale) as f32
                } else {
                    v
                }
            })
            .collect();
        Grid::new(
            info.width,
            info.height,
            info.transform,
            nodata,
            values,
            kind,
        )
    }
}

/// Writes `grid` as a tiled, deflate-compressed GeoTIFF.
///
/// Output bytes depend only on the grid, so identical grids produce
/// identical files.
pub fn write_geotiff(path: impl AsRef<Path>, grid: &Grid) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_geotiff(grid)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

enum TagValue {
    Short(Vec<u16>),
    Long(Vec<u32>),
    Double(Vec<f64>),
    Ascii(String),
}

impl TagValue {
    fn type_and_count(&self) -> (u16, u32) {
        match self {
            TagValue::Short(v) => (3, v.len() as u32),
            TagValue::Long(v) => (4, v.len() as u32),
            TagValue::Double(v) => (12, v.len() as u32),
            TagValue::Ascii(s) => (2, s.len() as u32 + 1),
        }
    }

    fn bytes(&self) -> Vec<u8> {
        match self {
            TagValue::Short(v) => v.iter().flat_map(|x| x.to_le_bytes()).collect(),
            TagValue::Long(v) => v.iter().flat_map(|x| x.to_le_bytes()).collect(),
            TagValue::Double(v) => v.iter().flat_map(|x| x.to_le_bytes()).collect(),
            TagValue::Ascii(s) => {
                let mut b = s.as_bytes().to_vec();
                b.push(0);
                b
            }
        }
    }
}

fn geo_keys(crs: &str) -> (Vec<u16>, String) {
    let mut entries: Vec<[u16; 4]> = Vec::new();
    let ascii = format!("{crs}|");
    let epsg = crs
        .strip_prefix("EPSG:")
        .and_then(|c| c.parse::<u16>().ok())
        .filter(|&c| c != USER_DEFINED);
    let geographic = matches!(
        crate::crs::crs_units(crs),
        Ok(crate::crs::CrsUnits::Degrees)
    );
    let model_type = match (epsg, geographic) {
        (_, true) => 2,
        (Some(_), false) => 1,
        (None, false) => USER_DEFINED,
    };
    entries.push([KEY_MODEL_TYPE, 0, 1, model_type]);
    entries.push([KEY_RASTER_TYPE, 0, 1, 1]);
    entries.push([KEY_CITATION, TAG_GEO_ASCII_PARAMS, ascii.len() as u16, 0]);
    if let Some(code) = epsg {
        let key = if geographic {
            KEY_GEOGRAPHIC_TYPE
        } else {
            KEY_PROJECTED_CS_TYPE
        };
        entries.push([key, 0, 1, code]);
    }
    let mut dir = vec![1, 1, 0, entries.len() as u16];
    for e in entries {
        dir.extend_from_slice(&e);
    }
    (dir, ascii)
}

fn format_nodata(v: f32) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v}")
    }
}

/// Encodes `grid` as GeoTIFF bytes.
pub fn encode_geotiff(grid: &Grid) -> Result<Vec<u8>> {
    let integer = grid.kind().is_integer();
    let (w, h) = (grid.width(), grid.height());
    if w > u32::MAX as usize || h > u32::MAX as usize {
        return Err(Error::InvalidGrid("grid too large for classic TIFF".into()));
    }
    let nodata = grid.nodata();
    if integer && !(nodata.fract() == 0.0 && (i16::MIN as f32..=i16::MAX as f32).contains(&nodata))
    {
        return Err(Error::InvalidGrid(format!(
            "nodata {nodata} is not representable as int16"
        )));
    }
    let bytes_per_sample = if integer { 2 } else { 4 };

    let tiles_across = w.div_ceil(TILE);
    let tiles_down = h.div_ceil(TILE);
    let mut out: Vec<u8> = vec![b'I', b'I', 42, 0, 0, 0, 0, 0];
    let mut offsets = Vec::with_capacity(tiles_across * tiles_down);
    let mut counts = Vec::with_capacity(tiles_across * tiles_down);
    let mut raw = Vec::with_capacity(TILE * TILE * bytes_per_sample);

    for ty in 0..tiles_down {
        for tx in 0..tiles_across {
            raw.clear();
            for r in 0..TILE {
                let row = ty * TILE + r;
                for c in 0..TILE {
                    let col = tx * TILE + c;
                    let v = if row < h && col < w {
                        grid.get(col, row)
                    } else {
                        nodata
                    };
                    if integer {
                        if !(i16::MIN as f32..=i16::MAX as f32).contains(&v) {
                            return Err(Error::InvalidGrid(format!(
                                "sample {v} is not representable as int16"
                            )));
                        }
                        raw.extend_from_slice(&(v as i16).to_le_bytes());
                    } else {
                        raw.extend_from_slice(&v.to_le_bytes());
                    }
                }
            }
            let mut enc = ZlibEncoder::new(Vec::new(), Compression::fast());
            std::io::Write::write_all(&mut enc, &raw).expect("in-memory write");
            let compressed = enc.finish().expect("in-memory write");
            if out.len() % 2 == 1 {
                out.push(0);
            }
            offsets.push(out.len() as u32);
            counts.push(compressed.len() as u32);
            out.extend_from_slice(&compressed);
        }
    }

    let t = grid.transform();
    let (keys, ascii) = geo_keys(&t.crs);
    let mut tags: Vec<(u16, TagValue)> = vec![
        (256, TagValue::Long(vec![w as u32])),
        (257, TagValue::Long(vec![h as u32])),
        (258, TagValue::Short(vec![8 * bytes_per_sample as u16])),
        (259, TagValue::Short(vec![8])),
        (262, TagValue::Short(vec![1])),
        (
            270,
            TagValue::Ascii(format!("{KIND_PREFIX}{}", grid.kind().name())),
        ),
        (277, TagValue::Short(vec![1])),
        (284, TagValue::Short(vec![1])),
        (322, TagValue::Short(vec![TILE as u16])),
        (323, TagValue::Short(vec![TILE as u16])),
        (324, TagValue::Long(offsets)),
        (325, TagValue::Long(counts)),
        (339, TagValue::Short(vec![if integer { 2 } else { 3 }])),
        (
            TAG_MODEL_PIXEL_SCALE,
            TagValue::Double(vec![t.pixel_w, t.pixel_h, 0.0]),
        ),
        (
            TAG_MODEL_TIEPOINT,
            TagValue::Double(vec![0.0, 0.0, 0.0, t.origin_x, t.origin_y, 0.0]),
        ),
        (TAG_GEO_KEY_DIRECTORY, TagValue::Short(keys)),
        (TAG_GEO_ASCII_PARAMS, TagValue::Ascii(ascii)),
        (TAG_GDAL_NODATA, TagValue::Ascii(format_nodata(nodata))),
    ];
    tags.sort_by_key(|(id, _)| *id);

    // Out-of-line values first, then the IFD itself.
    let mut value_offsets = Vec::with_capacity(tags.len());
    for (_, value) in &tags {
        let b = value.bytes();
        if b.len() > 4 {
            if out.len() % 2 == 1 {
                out.push(0);
            }
            value_offsets.push(Some(out.len() as u32));
            out.extend_from_slice(&b);
        } else {
            value_offsets.push(None);
        }
    }
    if out.len() % 2 == 1 {
        out.push(0);
    }
    let ifd_offset = out.len() as u32;
    out[4..8].copy_from_slice(&ifd_offset.to_le_bytes());
    out.extend_from_slice(&(tags.len() as u16).to_le_bytes());
    for ((id, value), off) in tags.iter().zip(&value_offsets) {
        let (ty, count) = value.type_and_count();
        out.extend_from_slice(&id.to_le_bytes());
        out.extend_from_slice(&ty.to_le_bytes());
        out.extend_from_slice(&count.to_le_bytes());
        match off {
            Some(o) => out.extend_from_slice(&o.to_le_bytes()),
            None => {
                let mut inline = value.bytes();
                inline.resize(4, 0);
                out.extend_from_slice(&inline);
            }
        }
    }
    out.extend_from_slice(&0u32.to_le_bytes());
    if out.len() > u32::MAX as usize {
        return Err(Error::InvalidGrid("encoded file exceeds 4 GiB".into()));
    }
    Ok(out)
}
