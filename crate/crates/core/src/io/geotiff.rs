//! Single-band GeoTIFF reading and writing for geographic WGS84 grids.
//!
//! Files are written as deflate-compressed 32- or 64-bit float tiles with
//! the GDAL NoData tag set; NaN cells are stored as the sentinel and mapped
//! back to NaN on read.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use flate2::write::ZlibEncoder;
use tiff::decoder::{Decoder, DecodingResult, Limits};
use tiff::encoder::TiffEncoder;
use tiff::tags::Tag;
use tiff::ColorType;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::raster::Raster;
use crate::scalar::Scalar;

/// NoData sentinel used unless the caller picks one: the most negative f32.
pub const DEFAULT_NODATA: f64 = f32::MIN as f64;
/// Largest disagreement in edges or cell size (degrees) tolerated against
/// an expected grid.
pub const GRID_TOLERANCE_DEG: f64 = 1e-6;

const TILE_MAX: usize = 256;
const KEY_MODEL_TYPE: u16 = 1024;
const KEY_RASTER_TYPE: u16 = 1025;
const KEY_GEOGRAPHIC_TYPE: u16 = 2048;
const MODEL_GEOGRAPHIC: u16 = 2;
const PIXEL_IS_AREA: u16 = 1;
const PIXEL_IS_POINT: u16 = 2;
const EPSG_WGS84: u16 = 4326;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleType {
    F32,
    F64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WriteOptions {
    pub nodata: f64,
    pub sample: SampleType,
}

impl Default for WriteOptions {
    fn default() -> Self {
        WriteOptions { nodata: DEFAULT_NODATA, sample: SampleType::F32 }
    }
}

fn format_nodata(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn tile_size(spec: &GridSpec) -> usize {
    let longest = spec.n_rows.max(spec.n_cols).min(TILE_MAX);
    longest.div_ceil(16) * 16
}

/// Writes `r` as a float32 GeoTIFF with `nodata` marking NaN cells.
pub fn write_raster<T: Scalar>(r: &Raster<T>, path: impl AsRef<Path>, nodata: f64) -> Result<()> {
    write_raster_with(r, path, &WriteOptions { nodata, sample: SampleType::F32 })
}

pub fn write_raster_with<T: Scalar>(r: &Raster<T>, path: impl AsRef<Path>, opts: &WriteOptions) -> Result<()> {
    let path = path.as_ref();
    let spec = r.spec();
    spec.validate()?;
    let nodata = match opts.sample {
        SampleType::F32 => opts.nodata as f32 as f64,
        SampleType::F64 => opts.nodata,
    };
    if nodata.is_nan() {
        return Err(Error::InvalidConfig("NoData sentinel must be a number".into()));
    }
    let stored = |v: T| -> f64 {
        let v = v.widen();
        match opts.sample {
            SampleType::F32 => v as f32 as f64,
            SampleType::F64 => v,
        }
    };
    if let Some(clash) = r.values().iter().map(|&v| stored(v)).find(|&v| v == nodata) {
        return Err(Error::InvalidConfig(format!("finite value {clash} collides with NoData sentinel")));
    }

    let tile = tile_size(spec);
    let (rows, cols) = spec.shape();
    let (tiles_down, tiles_across) = (rows.div_ceil(tile), cols.div_ceil(tile));
    let bytes_per_sample = match opts.sample {
        SampleType::F32 => 4,
        SampleType::F64 => 8,
    };

    let file = BufWriter::new(File::create(path)?);
    let mut enc = TiffEncoder::new(file)?;
    let mut dir = enc.image_directory()?;
    let mut offsets = Vec::with_capacity(tiles_down * tiles_across);
    let mut counts = Vec::with_capacity(tiles_down * tiles_across);
    let mut raw = Vec::with_capacity(tile * tile * bytes_per_sample);
    for ty in 0..tiles_down {
        for tx in 0..tiles_across {
            raw.clear();
            for tr in 0..tile {
                for tc in 0..tile {
                    let (row, col) = (ty * tile + tr, tx * tile + tc);
                    let v = if row < rows && col < cols {
                        let v = r.get(row, col);
                        if v.is_nan() {
                            nodata
                        } else {
                            stored(v)
                        }
                    } else {
                        nodata
                    };
                    match opts.sample {
                        SampleType::F32 => raw.extend_from_slice(&(v as f32).to_ne_bytes()),
                        SampleType::F64 => raw.extend_from_slice(&v.to_ne_bytes()),
                    }
                }
            }
            let mut z = ZlibEncoder::new(Vec::new(), flate2::Compression::default());
            z.write_all(&raw)?;
            let packed = z.finish()?;
            offsets.push(u32::try_from(dir.write_data(&packed[..])?).map_err(|_| {
                Error::Unsupported { path: path.to_path_buf(), reason: "file exceeds 4 GiB".into() }
            })?);
            counts.push(packed.len() as u32);
        }
    }

    let deg = spec.cell_size_deg();
    let bits = (bytes_per_sample * 8) as u16;
    dir.write_tag(Tag::ImageWidth, cols as u32)?;
    dir.write_tag(Tag::ImageLength, rows as u32)?;
    dir.write_tag(Tag::BitsPerSample, bits)?;
    dir.write_tag(Tag::Compression, 8u16)?;
    dir.write_tag(Tag::PhotometricInterpretation, 1u16)?;
    dir.write_tag(Tag::SamplesPerPixel, 1u16)?;
    dir.write_tag(Tag::PlanarConfiguration, 1u16)?;
    dir.write_tag(Tag::TileWidth, tile as u32)?;
    dir.write_tag(Tag::TileLength, tile as u32)?;
    dir.write_tag(Tag::TileOffsets, &offsets[..])?;
    dir.write_tag(Tag::TileByteCounts, &counts[..])?;
    dir.write_tag(Tag::SampleFormat, 3u16)?;
    dir.write_tag(Tag::ModelPixelScaleTag, &[deg, deg, 0.0][..])?;
    dir.write_tag(Tag::ModelTiepointTag, &[0.0, 0.0, 0.0, spec.west, spec.north, 0.0][..])?;
    let geokeys: [u16; 16] = [
        1, 1, 0, 3,
        KEY_MODEL_TYPE, 0, 1, MODEL_GEOGRAPHIC,
        KEY_RASTER_TYPE, 0, 1, PIXEL_IS_AREA,
        KEY_GEOGRAPHIC_TYPE, 0, 1, EPSG_WGS84,
    ];
    dir.write_tag(Tag::GeoKeyDirectoryTag, &geokeys[..])?;
    dir.write_tag(Tag::GdalNodata, format_nodata(nodata).as_str())?;
    dir.finish()?;
    Ok(())
}

/// Reads a single-band GeoTIFF into a 64-bit raster, mapping the NoData
/// sentinel to NaN. With `expected`, the file's grid must agree within
/// [`GRID_TOLERANCE_DEG`] and the returned raster carries `expected`.
pub fn read_raster(path: impl AsRef<Path>, expected: Option<&GridSpec>) -> Result<Raster<f64>> {
    let path = path.as_ref();
    if !path.is_file() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let mut dec = Decoder::new(BufReader::new(File::open(path)?))?.with_limits(Limits::unlimited());
    let unsupported = |reason: String| Error::Unsupported { path: path.to_path_buf(), reason };
    match dec.colortype()? {
        ColorType::Gray(_) => {}
        other => return Err(unsupported(format!("{other:?} is not a single band"))),
    }
    if dec.find_tag_unsigned::<u16>(Tag::SamplesPerPixel)?.unwrap_or(1) != 1 {
        return Err(unsupported("more than one band".into()));
    }
    let (width, height) = dec.dimensions()?;
    let found = read_grid(&mut dec, path, height as usize, width as usize)?;
    let spec = match expected {
        Some(want) => {
            want.check_aligned(&found, GRID_TOLERANCE_DEG)?;
            want.clone()
        }
        None => found,
    };

    let nodata = match dec.find_tag(Tag::GdalNodata)? {
        Some(v) => {
            let text = v.into_string()?;
            let text = text.trim_matches(char::from(0)).trim();
            Some(text.parse::<f64>().map_err(|_| unsupported(format!("NoData value `{text}`")))?)
        }
        None => None,
    };
    let is_nodata = |v: f64| nodata.is_some_and(|nd| v == nd);
    let values: Vec<f64> = match dec.read_image()? {
        DecodingResult::F32(v) => {
            let nd32 = nodata.map(|nd| nd as f32);
            v.into_iter()
                .map(|x| if Some(x) == nd32 { f64::NAN } else { x as f64 })
                .collect()
        }
        DecodingResult::F64(v) => v.into_iter().map(|x| if is_nodata(x) { f64::NAN } else { x }).collect(),
        DecodingResult::U8(v) => convert(v, is_nodata),
        DecodingResult::U16(v) => convert(v, is_nodata),
        DecodingResult::U32(v) => convert(v, is_nodata),
        DecodingResult::I8(v) => convert(v, is_nodata),
        DecodingResult::I16(v) => convert(v, is_nodata),
        DecodingResult::I32(v) => convert(v, is_nodata),
        _ => return Err(unsupported("sample type".into())),
    };
    Raster::new(spec, values)
}

fn convert<V: Into<f64>>(v: Vec<V>, is_nodata: impl Fn(f64) -> bool) -> Vec<f64> {
    v.into_iter()
        .map(|x| {
            let x = x.into();
            if is_nodata(x) {
                f64::NAN
            } else {
                x
            }
        })
        .collect()
}

fn read_grid<R: std::io::Read + std::io::Seek>(
    dec: &mut Decoder<R>,
    path: &Path,
    n_rows: usize,
    n_cols: usize,
) -> Result<GridSpec> {
    let no_georef = || Error::NoGeoreference(path.to_path_buf());
    let unsupported = |reason: String| Error::Unsupported { path: path.to_path_buf(), reason };
    let scale = dec.find_tag(Tag::ModelPixelScaleTag)?.ok_or_else(no_georef)?.into_f64_vec()?;
    let tie = dec.find_tag(Tag::ModelTiepointTag)?.ok_or_else(no_georef)?.into_f64_vec()?;
    let keys = dec.find_tag(Tag::GeoKeyDirectoryTag)?.ok_or_else(no_georef)?.into_u16_vec()?;
    if scale.len() < 2 || tie.len() < 6 || keys.len() < 4 {
        return Err(no_georef());
    }

    let mut raster_type = PIXEL_IS_AREA;
    for key in keys[4..].chunks_exact(4) {
        let (id, location, value) = (key[0], key[1], key[3]);
        if location != 0 {
            continue;
        }
        match id {
            KEY_MODEL_TYPE if value != MODEL_GEOGRAPHIC => {
                return Err(unsupported(format!("model type {value} is not geographic")))
            }
            KEY_GEOGRAPHIC_TYPE if value != EPSG_WGS84 => {
                return Err(unsupported(format!("geographic CRS EPSG:{value} is not WGS84")))
            }
            KEY_RASTER_TYPE => raster_type = value,
            _ => {}
        }
    }

    let (sx, sy) = (scale[0], scale[1]);
    if !(sx > 0.0 && sy > 0.0) || (sx - sy).abs() > 1e-12 * sx.max(sy) {
        return Err(unsupported(format!("non-square pixels {sx} x {sy}")));
    }
    let mut west = tie[3] - tie[0] * sx;
    let mut north = tie[4] + tie[1] * sy;
    if raster_type == PIXEL_IS_POINT {
        west -= sx / 2.0;
        north += sy / 2.0;
    }
    // 30" is not representable in degrees; snap back to a micro-arc-second
    let mut arcsec = sx * 3600.0;
    let snapped = (arcsec * 1e6).round() / 1e6;
    if (arcsec - snapped).abs() < 1e-9 {
        arcsec = snapped;
    }
    GridSpec::from_origin(west, north, arcsec, n_rows, n_cols)
}
