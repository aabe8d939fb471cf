//! Georeferencing for geographic (lon/lat) grids.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// CRS identifier for geographic WGS84, the only reference system accepted.
pub const WGS84: &str = "EPSG:4326";

const ARCSEC_PER_DEGREE: f64 = 3600.0;
const EXTENT_REL_TOL: f64 = 1e-9;

/// Extent, resolution and shape of a north-up geographic grid.
///
/// Rows run north to south, columns west to east. `cell_size` is in
/// arc-seconds; the extent is in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub west: f64,
    pub east: f64,
    pub south: f64,
    pub north: f64,
    pub cell_size: f64,
    pub n_rows: usize,
    pub n_cols: usize,
    pub crs: String,
}

impl GridSpec {
    /// Builds a grid from its extent; the shape is derived and must fit the
    /// extent to within 1e-9 relative.
    pub fn from_extent(west: f64, east: f64, south: f64, north: f64, cell_size: f64) -> Result<Self> {
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(Error::InvalidGrid(format!("cell size {cell_size} must be positive")));
        }
        let deg = cell_size / ARCSEC_PER_DEGREE;
        let n_cols = ((east - west) / deg).round();
        let n_rows = ((north - south) / deg).round();
        if n_cols < 1.0 || n_rows < 1.0 {
            return Err(Error::InvalidGrid(format!(
                "extent {west}..{east} x {south}..{north} holds no {cell_size}\" cells"
            )));
        }
        let spec = GridSpec {
            west,
            east,
            south,
            north,
            cell_size,
            n_rows: n_rows as usize,
            n_cols: n_cols as usize,
            crs: WGS84.to_string(),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Builds a grid from its north-west corner and shape.
    pub fn from_origin(west: f64, north: f64, cell_size: f64, n_rows: usize, n_cols: usize) -> Result<Self> {
        let deg = cell_size / ARCSEC_PER_DEGREE;
        let spec = GridSpec {
            west,
            east: west + n_cols as f64 * deg,
            south: north - n_rows as f64 * deg,
            north,
            cell_size,
            n_rows,
            n_cols,
            crs: WGS84.to_string(),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Pan-European working extent: 25°W–75°E, 28°N–72°N at 30″.
    pub fn study_area() -> Self {
        Self::from_extent(-25.0, 75.0, 28.0, 72.0, 30.0).expect("study area extent is exact")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.west < self.east && self.south < self.north) {
            return Err(Error::InvalidGrid(format!(
                "degenerate extent west {} east {} south {} north {}",
                self.west, self.east, self.south, self.north
            )));
        }
        if self.n_rows == 0 || self.n_cols == 0 {
            return Err(Error::InvalidGrid("grid has no cells".into()));
        }
        if self.north > 90.0 || self.south < -90.0 {
            return Err(Error::InvalidGrid(format!("latitudes {}..{} exceed ±90", self.south, self.north)));
        }
        let deg = self.cell_size_deg();
        let width = self.east - self.west;
        let height = self.north - self.south;
        if (self.n_cols as f64 * deg - width).abs() > EXTENT_REL_TOL * width {
            return Err(Error::InvalidGrid(format!(
                "{} columns of {}\" do not span {width}°",
                self.n_cols, self.cell_size
            )));
        }
        if (self.n_rows as f64 * deg - height).abs() > EXTENT_REL_TOL * height {
            return Err(Error::InvalidGrid(format!(
                "{} rows of {}\" do not span {height}°",
                self.n_rows, self.cell_size
            )));
        }
        if self.crs != WGS84 {
            return Err(Error::InvalidGrid(format!("CRS {} is not {WGS84}", self.crs)));
        }
        Ok(())
    }

    pub fn cell_size_deg(&self) -> f64 {
        self.cell_size / ARCSEC_PER_DEGREE
    }

    pub fn len(&self) -> usize {
        self.n_rows * self.n_cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_rows, self.n_cols)
    }

    /// Latitude of the centre of `row`, in degrees.
    pub fn row_lat(&self, row: usize) -> f64 {
        self.north - (row as f64 + 0.5) * self.cell_size_deg()
    }

    /// Longitude of the centre of `col`, in degrees.
    pub fn col_lon(&self, col: usize) -> f64 {
        self.west + (col as f64 + 0.5) * self.cell_size_deg()
    }

    /// Row and column of the cell containing a point, if it lies inside the
    /// extent. West and north edges are inclusive.
    pub fn cell_at(&self, lon: f64, lat: f64) -> Option<(usize, usize)> {
        if !(lon.is_finite() && lat.is_finite()) {
            return None;
        }
        let deg = self.cell_size_deg();
        let col = ((lon - self.west) / deg).floor();
        let row = ((self.north - lat) / deg).floor();
        if col < 0.0 || row < 0.0 {
            return None;
        }
        let (row, col) = (row as usize, col as usize);
        (row < self.n_rows && col < self.n_cols).then_some((row, col))
    }

    /// The same extent at `factor` times coarser resolution.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || self.n_rows % factor != 0 || self.n_cols % factor != 0 {
            return Err(Error::NotDivisible { rows: self.n_rows, cols: self.n_cols, factor });
        }
        Ok(GridSpec {
            cell_size: self.cell_size * factor as f64,
            n_rows: self.n_rows / factor,
            n_cols: self.n_cols / factor,
            ..self.clone()
        })
    }

    /// The same extent at `factor` times finer resolution.
    pub fn refine(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::InvalidGrid("refinement factor must be positive".into()));
        }
        Ok(GridSpec {
            cell_size: self.cell_size / factor as f64,
            n_rows: self.n_rows * factor,
            n_cols: self.n_cols * factor,
            ..self.clone()
        })
    }

    /// Checks that `other` has the same shape and that its edges and cell
    /// size agree within `tol_deg` degrees.
    pub fn check_aligned(&self, other: &GridSpec, tol_deg: f64) -> Result<()> {
        let edges = [
            ("west", self.west, other.west),
            ("east", self.east, other.east),
            ("south", self.south, other.south),
            ("north", self.north, other.north),
            ("cell size", self.cell_size_deg(), other.cell_size_deg()),
        ];
        for (name, a, b) in edges {
            if (a - b).abs() > tol_deg {
                return Err(Error::GridMismatch(format!("{name} differs: {a} vs {b}")));
            }
        }
        if self.shape() != other.shape() {
            return Err(Error::GridMismatch(format!(
                "shape {:?} vs {:?}",
                self.shape(),
                other.shape()
            )));
        }
        if self.crs != other.crs {
            return Err(Error::GridMismatch(format!("CRS {} vs {}", self.crs, other.crs)));
        }
        Ok(())
    }
}
