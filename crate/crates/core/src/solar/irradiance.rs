//! Potential (airless, beam-only) daily irradiation on tilted, shadowed
//! terrain.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::geometry::{eccentricity_factor, elevation_azimuth, solar_declination, sun_direction, sunset_hour_angle};
use super::horizon::{HorizonField, HorizonScanner};
use super::terrain::{slope_aspect, surface_normal, CellMetric};
use super::SolarConfig;
use crate::error::{Error, Result};
use crate::raster::Raster;

/// Fewest trapezoid intervals across any daylight window, so short winter
/// days at high latitude are not integrated with only a handful of samples.
pub const MIN_DAYLIGHT_INTERVALS: usize = 24;

const HOURS_PER_RADIAN: f64 = 12.0 / PI;

/// Slope, aspect and (optionally) horizon angles of a DEM.
#[derive(Debug, Clone)]
pub struct TerrainDerivatives {
    pub slope: Raster<f64>,
    pub aspect: Raster<f64>,
    pub horizon: Option<HorizonField>,
}

impl TerrainDerivatives {
    pub fn from_dem(dem: &Raster<f64>, metric: &CellMetric, cfg: &SolarConfig) -> Self {
        let (slope, aspect) = slope_aspect(dem, metric);
        let horizon = Some(super::horizon::horizon_angles(dem, metric, cfg));
        TerrainDerivatives { slope, aspect, horizon }
    }
}

/// Latitude used for the sun's path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Latitude {
    /// Centre latitude of each row of the raster's grid.
    FromGrid,
    /// One latitude (radians) for the whole raster.
    Fixed(f64),
}

impl Latitude {
    fn of_row(self, spec: &crate::grid::GridSpec, row: usize) -> f64 {
        match self {
            Latitude::FromGrid => spec.row_lat(row).to_radians(),
            Latitude::Fixed(lat) => lat,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct SunSample {
    /// Integration weight times beam irradiance on a normal surface, Wh/m².
    weight: f64,
    dir: [f64; 3],
    elevation: f64,
    azimuth_deg: f64,
}

/// Sun path of one day at one latitude, sampled for trapezoidal integration
/// between sunrise and sunset.
#[derive(Debug, Clone)]
pub struct DayPath {
    samples: Vec<SunSample>,
}

impl DayPath {
    pub fn new(lat: f64, day: u32, cfg: &SolarConfig) -> Result<Self> {
        if !(lat.abs() < PI / 2.0) {
            return Err(Error::InvalidConfig(format!("latitude {lat} rad is not inside (-π/2, π/2)")));
        }
        let decl = solar_declination(day)?;
        let beam = cfg.solar_constant * eccentricity_factor(day)?;
        let sunset = sunset_hour_angle(lat, decl);
        if sunset <= 0.0 {
            return Ok(DayPath { samples: Vec::new() });
        }
        let daylight_h = 2.0 * sunset * HOURS_PER_RADIAN;
        let n = ((daylight_h / cfg.time_step).ceil() as usize).max(MIN_DAYLIGHT_INTERVALS);
        let h_rad = 2.0 * sunset / n as f64;
        let h_hours = daylight_h / n as f64;
        let samples = (0..=n)
            .map(|j| {
                let omega = -sunset + j as f64 * h_rad;
                let dir = sun_direction(lat, decl, omega);
                let (elevation, azimuth) = elevation_azimuth(dir);
                let end = if j == 0 || j == n { 0.5 } else { 1.0 };
                SunSample { weight: beam * h_hours * end, dir, elevation, azimuth_deg: azimuth.to_degrees() }
            })
            .collect();
        Ok(DayPath { samples })
    }

    /// Daily beam total (Wh/m²) on a surface with outward normal `normal`,
    /// shadowed wherever the sun is at or below `horizon`.
    pub fn daily_total(&self, normal: [f64; 3], horizon: Option<(&HorizonField, usize)>) -> f64 {
        let mut total = 0.0;
        for s in &self.samples {
            let cos_i = s.dir[0] * normal[0] + s.dir[1] * normal[1] + s.dir[2] * normal[2];
            if cos_i <= 0.0 {
                continue;
            }
            if let Some((field, idx)) = horizon {
                if s.elevation <= field.towards(idx, s.azimuth_deg) {
                    continue;
                }
            }
            total += s.weight * cos_i;
        }
        total
    }

    /// Same as [`Self::daily_total`] with a cell's horizon angles passed as
    /// a slice indexed by direction.
    fn daily_total_scan(&self, normal: [f64; 3], horizon: &[f64], azimuth_step: f64) -> f64 {
        let n_dirs = horizon.len();
        let mut total = 0.0;
        for s in &self.samples {
            let cos_i = s.dir[0] * normal[0] + s.dir[1] * normal[1] + s.dir[2] * normal[2];
            if cos_i <= 0.0 {
                continue;
            }
            let k = (s.azimuth_deg / azimuth_step).round() as usize % n_dirs;
            if s.elevation <= horizon[k] {
                continue;
            }
            total += s.weight * cos_i;
        }
        total
    }
}

/// Daily potential irradiation (Wh/m²) of every cell for one day of year.
pub fn daily_potential_irradiation(
    terrain: &TerrainDerivatives,
    latitude: Latitude,
    day: u32,
    cfg: &SolarConfig,
) -> Result<Raster<f64>> {
    cfg.validate()?;
    let spec = terrain.slope.spec().clone();
    let cols = spec.n_cols;
    let paths = (0..spec.n_rows)
        .map(|r| DayPath::new(latitude.of_row(&spec, r), day, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(Raster::from_rows(spec, |row, out| {
        let path = &paths[row];
        for (col, o) in out.iter_mut().enumerate() {
            let idx = row * cols + col;
            let slope = terrain.slope.values()[idx];
            if slope.is_nan() {
                *o = f64::NAN;
                continue;
            }
            let normal = surface_normal(slope, terrain.aspect.values()[idx]);
            *o = path.daily_total(normal, terrain.horizon.as_ref().map(|h| (h, idx)));
        }
    }))
}

/// Daily irradiation maps for every configured central day, computed from
/// the DEM in one pass: each cell's horizon is scanned once and reused for
/// all days, so the full horizon field is never held in memory.
pub fn central_day_irradiation(dem: &Raster<f64>, latitude: Latitude, cfg: &SolarConfig) -> Result<Vec<Raster<f64>>> {
    cfg.validate()?;
    let spec = dem.spec().clone();
    let metric = CellMetric::from_grid(&spec);
    central_day_irradiation_with_metric(dem, &metric, latitude, cfg)
}

pub fn central_day_irradiation_with_metric(
    dem: &Raster<f64>,
    metric: &CellMetric,
    latitude: Latitude,
    cfg: &SolarConfig,
) -> Result<Vec<Raster<f64>>> {
    cfg.validate()?;
    let spec = dem.spec().clone();
    let (rows, cols) = spec.shape();
    let n_days = cfg.central_days.len();
    let (slope, aspect) = slope_aspect(dem, metric);
    let scanner = HorizonScanner::new(dem, metric, cfg);
    let n_dirs = scanner.n_dirs();

    let per_row: Vec<Vec<f64>> = (0..rows)
        .into_par_iter()
        .map(|row| -> Result<Vec<f64>> {
            let lat = latitude.of_row(&spec, row);
            let paths = cfg
                .central_days
                .iter()
                .map(|&d| DayPath::new(lat, d, cfg))
                .collect::<Result<Vec<_>>>()?;
            let rays = scanner.rays_for_row(row);
            let mut horizon = vec![0.0; n_dirs];
            let mut out = vec![0.0; cols * n_days];
            for col in 0..cols {
                let idx = row * cols + col;
                let cell = &mut out[col * n_days..(col + 1) * n_days];
                if slope.values()[idx].is_nan() {
                    cell.fill(f64::NAN);
                    continue;
                }
                scanner.scan_cell(&rays, row, col, &mut horizon);
                let normal = surface_normal(slope.values()[idx], aspect.values()[idx]);
                for (v, path) in cell.iter_mut().zip(&paths) {
                    *v = path.daily_total_scan(normal, &horizon, cfg.azimuth_step);
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    (0..n_days)
        .map(|d| {
            let values = per_row
                .iter()
                .flat_map(|row| row.chunks(n_days).map(move |cell| cell[d]))
                .collect();
            Raster::new(spec.clone(), values)
        })
        .collect()
}
