//! Slope and aspect of a geographic DEM.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::grid::GridSpec;
use crate::raster::Raster;

/// Mean earth radius, metres.
pub const EARTH_RADIUS_M: f64 = 6_371_008.8;

/// Aspect stored for cells with zero slope.
pub const FLAT_ASPECT: f64 = -1.0;

/// Ground size of cells in metres. East–west spacing shrinks with the
/// cosine of latitude, so it is kept per row.
#[derive(Debug, Clone, PartialEq)]
pub struct CellMetric {
    dx: Vec<f64>,
    dy: f64,
}

impl CellMetric {
    pub fn from_grid(spec: &GridSpec) -> Self {
        let metres_per_deg = EARTH_RADIUS_M * PI / 180.0;
        let dy = spec.cell_size_deg() * metres_per_deg;
        let dx = (0..spec.n_rows)
            .map(|r| dy * spec.row_lat(r).to_radians().cos())
            .collect();
        CellMetric { dx, dy }
    }

    /// Same spacing on every row; for projected test surfaces.
    pub fn uniform(n_rows: usize, dx: f64, dy: f64) -> Self {
        CellMetric { dx: vec![dx; n_rows], dy }
    }

    #[inline]
    pub fn dx(&self, row: usize) -> f64 {
        self.dx[row]
    }

    #[inline]
    pub fn dy(&self) -> f64 {
        self.dy
    }
}

/// East and north elevation gradients by Horn's 3×3 weighted differences.
///
/// Neighbours beyond the grid edge or holding NaN take the centre value.
/// Returns `None` for a NaN centre.
pub fn horn_gradient(dem: &Raster<f64>, metric: &CellMetric, row: usize, col: usize) -> Option<(f64, f64)> {
    let centre = dem.get(row, col);
    if centre.is_nan() {
        return None;
    }
    let (rows, cols) = dem.spec().shape();
    let z = |dr: isize, dc: isize| -> f64 {
        let r = row as isize + dr;
        let c = col as isize + dc;
        if r < 0 || c < 0 || r >= rows as isize || c >= cols as isize {
            return centre;
        }
        let v = dem.get(r as usize, c as usize);
        if v.is_nan() {
            centre
        } else {
            v
        }
    };
    let dz_east = ((z(-1, 1) + 2.0 * z(0, 1) + z(1, 1)) - (z(-1, -1) + 2.0 * z(0, -1) + z(1, -1)))
        / (8.0 * metric.dx(row));
    // row index grows southwards
    let dz_north = ((z(-1, -1) + 2.0 * z(-1, 0) + z(-1, 1)) - (z(1, -1) + 2.0 * z(1, 0) + z(1, 1)))
        / (8.0 * metric.dy());
    Some((dz_east, dz_north))
}

/// Slope angle and downslope aspect (clockwise from north) from gradients.
pub fn slope_aspect_from_gradient(dz_east: f64, dz_north: f64) -> (f64, f64) {
    let slope = dz_east.hypot(dz_north).atan();
    if slope == 0.0 {
        return (0.0, FLAT_ASPECT);
    }
    let aspect = (-dz_east).atan2(-dz_north).rem_euclid(2.0 * PI);
    (slope, aspect)
}

/// Slope (radians) and aspect (radians clockwise from north, facing
/// downslope; [`FLAT_ASPECT`] where the slope is zero).
pub fn slope_aspect(dem: &Raster<f64>, metric: &CellMetric) -> (Raster<f64>, Raster<f64>) {
    let cols = dem.n_cols();
    let pairs: Vec<(f64, f64)> = (0..dem.spec().len())
        .into_par_iter()
        .map(|i| match horn_gradient(dem, metric, i / cols, i % cols) {
            Some((e, n)) => slope_aspect_from_gradient(e, n),
            None => (f64::NAN, f64::NAN),
        })
        .collect();
    let (slope, aspect): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let spec = dem.spec().clone();
    (
        Raster::new(spec.clone(), slope).expect("one value per cell"),
        Raster::new(spec, aspect).expect("one value per cell"),
    )
}

/// Outward unit normal of a tilted surface in (east, north, up).
pub fn surface_normal(slope: f64, aspect: f64) -> [f64; 3] {
    if slope == 0.0 || aspect == FLAT_ASPECT {
        return [0.0, 0.0, 1.0];
    }
    let (sin_s, cos_s) = slope.sin_cos();
    let (sin_a, cos_a) = aspect.sin_cos();
    [sin_s * sin_a, sin_s * cos_a, cos_s]
}
