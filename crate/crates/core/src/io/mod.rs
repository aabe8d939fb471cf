//! File boundary: GeoTIFF rasters and the layer manifest.

mod geotiff;
pub mod manifest;

pub use geotiff::{
    read_raster, write_raster, write_raster_with, SampleType, WriteOptions, DEFAULT_NODATA, GRID_TOLERANCE_DEG,
};
pub use manifest::{file_checksum, LayerManifest, Manifest, Role};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::raster::{MonthlyStack, Raster};

/// Reads the single layer for `role`.
pub fn load_layer(manifest: &Manifest, role: Role, expected: Option<&GridSpec>) -> Result<Raster<f64>> {
    let entry = manifest
        .entries(role)
        .into_iter()
        .next()
        .ok_or_else(|| Error::Manifest(format!("no layer for role {role}")))?;
    read_raster(manifest.resolve(entry), expected)
}

/// Reads the twelve monthly layers of `role` and checks that they share a
/// NaN mask.
pub fn load_stack(manifest: &Manifest, role: Role, expected: Option<&GridSpec>) -> Result<MonthlyStack<f64>> {
    let entries = manifest.entries(role);
    if entries.len() != 12 {
        return Err(Error::Manifest(format!("role {role} has {} monthly layers", entries.len())));
    }
    let months = entries
        .into_iter()
        .map(|e| read_raster(manifest.resolve(e), expected))
        .collect::<Result<Vec<_>>>()?;
    MonthlyStack::new(months).map_err(|e| match e {
        Error::MaskMismatch(msg) => Error::MaskMismatch(format!("{role}: {msg}")),
        other => other,
    })
}
