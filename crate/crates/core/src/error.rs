use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("raster holds {found} values but its grid has {expected} cells")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("{rows}x{cols} grid is not divisible by aggregation factor {factor}")]
    NotDivisible { rows: usize, cols: usize, factor: usize },
    #[error("monthly stack needs 12 rasters, got {0}")]
    MonthCount(usize),
    #[error("inconsistent NaN mask: {0}")]
    MaskMismatch(String),
    #[error("constraint `{constraint}` violated at {violations} cells (max magnitude {magnitude})")]
    ConstraintViolation { constraint: String, violations: u64, magnitude: f64 },
    #[error("day of year {0} is outside 1..=365")]
    DayOutOfRange(u32),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("missing file {}", .0.display())]
    MissingFile(PathBuf),
    #[error("{}: no georeference tags", .0.display())]
    NoGeoreference(PathBuf),
    #[error("unsupported raster {}: {reason}", path.display())]
    Unsupported { path: PathBuf, reason: String },
    #[error("checksum mismatch for {}: manifest {expected}, file {found}", path.display())]
    ChecksumMismatch { path: PathBuf, expected: String, found: String },
    #[error("manifest: {0}")]
    Manifest(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("tiff: {0}")]
    Tiff(#[from] tiff::TiffError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
