//! Terrain horizon angles by ray walking over the DEM.
//!
//! Each ray advances one cell along its dominant axis per step and reads the
//! nearest cell. Distances use the metric of the ray's origin row.

use rayon::prelude::*;

use super::terrain::CellMetric;
use super::SolarConfig;
use crate::raster::Raster;

#[derive(Debug, Clone, Copy)]
struct Ray {
    dcol: f64,
    drow: f64,
    step_m: f64,
    max_steps: usize,
}

/// Walks horizon rays over one DEM.
pub struct HorizonScanner<'a> {
    dem: &'a Raster<f64>,
    metric: &'a CellMetric,
    azimuth_step: f64,
    n_dirs: usize,
    radius: f64,
    /// Highest finite elevation; bounds what any ray can still find.
    peak: f64,
}

/// Per-row ray geometry for a [`HorizonScanner`].
pub struct RowRays(Vec<Ray>);

impl<'a> HorizonScanner<'a> {
    pub fn new(dem: &'a Raster<f64>, metric: &'a CellMetric, cfg: &SolarConfig) -> Self {
        HorizonScanner {
            dem,
            metric,
            azimuth_step: cfg.azimuth_step,
            n_dirs: cfg.n_directions(),
            radius: cfg.horizon_search_radius,
            peak: dem.values().iter().copied().filter(|v| !v.is_nan()).fold(f64::NEG_INFINITY, f64::max),
        }
    }

    pub fn n_dirs(&self) -> usize {
        self.n_dirs
    }

    pub fn rays_for_row(&self, row: usize) -> RowRays {
        let (dx, dy) = (self.metric.dx(row), self.metric.dy());
        let rays = (0..self.n_dirs)
            .map(|k| {
                let az = (k as f64 * self.azimuth_step).to_radians();
                // cells per metre along the ray
                let ucol = az.sin() / dx;
                let urow = -az.cos() / dy;
                let step_m = 1.0 / ucol.abs().max(urow.abs());
                Ray {
                    dcol: ucol * step_m,
                    drow: urow * step_m,
                    step_m,
                    max_steps: (self.radius / step_m).floor() as usize,
                }
            })
            .collect();
        RowRays(rays)
    }

    /// Writes one horizon angle (radians) per direction into `out`; NaN
    /// for a NaN cell, 0 where nothing rises above the cell.
    pub fn scan_cell(&self, rays: &RowRays, row: usize, col: usize, out: &mut [f64]) {
        let h0 = self.dem.get(row, col);
        if h0.is_nan() {
            out.fill(f64::NAN);
            return;
        }
        let rows = self.dem.n_rows();
        let n_cols = self.dem.n_cols();
        let values = self.dem.values();
        let rise = self.peak - h0;
        for (o, ray) in out.iter_mut().zip(&rays.0) {
            // best slope so far; compared by cross-multiplying to avoid a
            // division per step
            let mut best = 0.0f64;
            for i in 1..=ray.max_steps {
                let fi = i as f64;
                let dist = fi * ray.step_m;
                // nothing further out can beat the current slope
                if rise <= best * dist {
                    break;
                }
                // nearest cell; round-half-away-from-zero without a libm call
                let r = row as f64 + fi * ray.drow;
                let c = col as f64 + fi * ray.dcol;
                if r <= -0.5 || c <= -0.5 {
                    break;
                }
                let (r, c) = ((r + 0.5) as usize, (c + 0.5) as usize);
                if r >= rows || c >= n_cols {
                    break;
                }
                let dh = values[r * n_cols + c] - h0;
                if dh > best * dist {
                    best = dh / dist;
                }
            }
            *o = best.atan();
        }
    }
}

/// Horizon angles for every cell, `n_dirs` per cell, directions clockwise
/// from north in steps of the configured azimuth increment.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizonField {
    n_dirs: usize,
    azimuth_step: f64,
    angles: Vec<f64>,
}

impl HorizonField {
    /// A field of zero horizons (unobstructed sky).
    pub fn open(n_cells: usize, cfg: &SolarConfig) -> Self {
        let n_dirs = cfg.n_directions();
        HorizonField { n_dirs, azimuth_step: cfg.azimuth_step, angles: vec![0.0; n_cells * n_dirs] }
    }

    /// A field with the same angle in every direction of every cell.
    pub fn uniform(n_cells: usize, cfg: &SolarConfig, angle: f64) -> Self {
        let mut f = Self::open(n_cells, cfg);
        f.angles.fill(angle);
        f
    }

    pub fn n_dirs(&self) -> usize {
        self.n_dirs
    }

    pub fn azimuth_step(&self) -> f64 {
        self.azimuth_step
    }

    pub fn cell(&self, idx: usize) -> &[f64] {
        &self.angles[idx * self.n_dirs..(idx + 1) * self.n_dirs]
    }

    /// Angle towards the direction nearest to `azimuth_deg`.
    pub fn towards(&self, idx: usize, azimuth_deg: f64) -> f64 {
        let k = (azimuth_deg / self.azimuth_step).round() as usize % self.n_dirs;
        self.cell(idx)[k]
    }
}

pub fn horizon_angles(dem: &Raster<f64>, metric: &CellMetric, cfg: &SolarConfig) -> HorizonField {
    let scanner = HorizonScanner::new(dem, metric, cfg);
    let n_dirs = scanner.n_dirs();
    let cols = dem.n_cols();
    let mut angles = vec![0.0; dem.spec().len() * n_dirs];
    angles
        .par_chunks_mut(cols * n_dirs)
        .enumerate()
        .for_each(|(row, out)| {
            let rays = scanner.rays_for_row(row);
            for (col, cell) in out.chunks_mut(n_dirs).enumerate() {
                scanner.scan_cell(&rays, row, col, cell);
            }
        });
    HorizonField { n_dirs, azimuth_step: cfg.azimuth_step, angles }
}
