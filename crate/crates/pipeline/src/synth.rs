//! Synthetic input sets with known structure for tests and demos.
//!
//! The fine DEM is a sum of Gaussian hills plus cell-scale noise; the
//! coarse DEM triple is its block minimum, mean and maximum. Monthly
//! temperatures follow a seasonal cycle with a lapse-rate term, and a
//! random water mask is shared by every layer.

use std::fs;
use std::path::{Path, PathBuf};

use bioclim_core::io::{file_checksum, write_raster, LayerManifest, Manifest, Role, DEFAULT_NODATA};
use bioclim_core::{GridSpec, Raster, MONTHS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{PipelineError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    /// Coarse grid is `size × size` cells of 30″.
    pub size: usize,
    pub fine_factor: usize,
    pub seed: u64,
    /// Probability that a coarse cell is water.
    pub water_fraction: f64,
    /// Probability that a cell-month has its minimum and maximum
    /// temperature swapped.
    pub swap_fraction: f64,
    pub west: f64,
    pub north: f64,
    pub horizon_search_radius: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            size: 100,
            fine_factor: 4,
            seed: 42,
            water_fraction: 0.1,
            swap_fraction: 0.01,
            west: 10.0,
            north: 47.0,
            horizon_search_radius: 20_000.0,
        }
    }
}

/// Paths of a written dataset.
#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub root: PathBuf,
    pub manifest: PathBuf,
    pub config: PathBuf,
    pub grid: GridSpec,
    pub water: Vec<bool>,
}

fn fine_dem(spec: &GridSpec, p: &SynthParams, water: &[bool], rng: &mut ChaCha8Rng) -> Raster<f64> {
    let n = spec.n_rows as f64;
    let hills: Vec<(f64, f64, f64, f64)> = (0..12)
        .map(|_| {
            (
                rng.gen_range(0.0..n),
                rng.gen_range(0.0..n),
                rng.gen_range(150.0..1500.0),
                rng.gen_range(0.03..0.15) * n,
            )
        })
        .collect();
    let noise: Vec<f64> = (0..spec.len()).map(|_| rng.gen_range(-15.0..15.0)).collect();
    let k = p.fine_factor;
    let coarse_cols = spec.n_cols / k;
    Raster::from_fn(spec.clone(), |r, c| {
        if water[(r / k) * coarse_cols + c / k] {
            return f64::NAN;
        }
        let (y, x) = (r as f64, c as f64);
        let relief = hills.iter().fold(200.0, |acc, &(hr, hc, h, s)| {
            acc + h * (-((y - hr).powi(2) + (x - hc).powi(2)) / (2.0 * s * s)).exp()
        });
        relief + noise[r * spec.n_cols + c]
    })
}

/// Block minimum, mean and maximum of the fine DEM.
fn dem_triple(fine: &Raster<f64>, coarse: &GridSpec, k: usize) -> [Raster<f64>; 3] {
    let block = |r: usize, c: usize| -> Vec<f64> {
        (0..k * k).map(|t| fine.get(r * k + t / k, c * k + t % k)).collect()
    };
    let lo = Raster::from_fn(coarse.clone(), |r, c| block(r, c).into_iter().fold(f64::INFINITY, f64::min));
    let mean = Raster::from_fn(coarse.clone(), |r, c| block(r, c).iter().sum::<f64>() / (k * k) as f64);
    let hi = Raster::from_fn(coarse.clone(), |r, c| block(r, c).into_iter().fold(f64::NEG_INFINITY, f64::max));
    // fold with min/max drops NaN; restore the water mask
    let mask = mean.nan_mask();
    [lo.with_mask(&mask).unwrap(), mean, hi.with_mask(&mask).unwrap()]
}

fn config_text(p: &SynthParams, grid: &GridSpec) -> String {
    format!(
        r#"manifest = "manifest.csv"
output_dir = "out"
cache_dir = "cache"
workers = 1
strict_semantics = false
covariates = "all"

[grid]
west = {west:?}
east = {east:?}
south = {south:?}
north = {north:?}
cell_size = 30.0
fine_factor = {k}

[solar]
horizon_search_radius = {radius:?}

[lapse]
lapse_rate = 0.0065
counting_mode = "fractional"
"#,
        west = grid.west,
        east = grid.east,
        south = grid.south,
        north = grid.north,
        k = p.fine_factor,
        radius = p.horizon_search_radius,
    )
}

/// Writes inputs, `manifest.csv` and `config.toml` under `root`.
pub fn generate(root: impl AsRef<Path>, p: &SynthParams) -> Result<SynthDataset> {
    if p.size == 0 || p.fine_factor == 0 {
        return Err(PipelineError::InvalidArgument("size and fine factor must be positive".into()));
    }
    let root = root.as_ref().to_path_buf();
    let inputs = root.join("inputs");
    fs::create_dir_all(&inputs)?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let grid = GridSpec::from_origin(p.west, p.north, 30.0, p.size, p.size)?;
    let fine_grid = grid.refine(p.fine_factor)?;
    let water: Vec<bool> = (0..grid.len()).map(|_| rng.gen_bool(p.water_fraction)).collect();

    let fine = fine_dem(&fine_grid, p, &water, &mut rng);
    let [e_min, e_mean, e_max] = dem_triple(&fine, &grid, p.fine_factor);

    let mut layers = Vec::new();
    let mut put = |name: String, role: Role, month: Option<u8>, units: &str, r: &Raster<f64>| -> Result<()> {
        let rel = format!("inputs/{name}.tif");
        let path = root.join(&rel);
        write_raster(&r.cast::<f32>(), &path, DEFAULT_NODATA)?;
        layers.push(LayerManifest { checksum: file_checksum(&path)?, path: rel, role, month, units: units.into() });
        Ok(())
    };
    put("dem_fine".into(), Role::DemFine, None, "m", &fine)?;
    put("dem_min".into(), Role::DemMin, None, "m", &e_min)?;
    put("dem_mean".into(), Role::DemMean, None, "m", &e_mean)?;
    put("dem_max".into(), Role::DemMax, None, "m", &e_max)?;

    let offsets: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-1.5..1.5)).collect();
    let ranges: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(3.0..9.0)).collect();
    let wetness: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(10.0..120.0)).collect();
    for m in 0..MONTHS {
        let season = -(2.0 * std::f64::consts::PI * (m as f64 + 0.5) / 12.0).cos();
        let t_avg = Raster::from_fn(grid.clone(), |r, c| {
            let i = r * grid.n_cols + c;
            let lat_term = -0.6 * (grid.row_lat(r) - 46.5);
            9.0 + 11.0 * season + lat_term - 0.0065 * (e_mean.values()[i] - 500.0) + offsets[i]
        });
        let mut t_min = Raster::from_fn(grid.clone(), |r, c| t_avg.get(r, c) - ranges[r * grid.n_cols + c]);
        let mut t_max = Raster::from_fn(grid.clone(), |r, c| t_avg.get(r, c) + ranges[r * grid.n_cols + c]);
        let swaps: Vec<bool> = (0..grid.len()).map(|_| rng.gen_bool(p.swap_fraction)).collect();
        let (lo, hi): (Vec<f64>, Vec<f64>) = t_min
            .values()
            .iter()
            .zip(t_max.values())
            .zip(&swaps)
            .map(|((&a, &b), &s)| if s { (b, a) } else { (a, b) })
            .unzip();
        t_min = Raster::new(grid.clone(), lo)?;
        t_max = Raster::new(grid.clone(), hi)?;
        let noise: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(0.0..25.0)).collect();
        let precip = Raster::from_fn(grid.clone(), |r, c| {
            let i = r * grid.n_cols + c;
            (wetness[i] * (1.0 + 0.6 * season) + noise[i]).max(0.0)
        });
        let month = Some(m as u8 + 1);
        for (role, units, layer) in [
            (Role::TAvg, "degC", &t_avg),
            (Role::TMin, "degC", &t_min),
            (Role::TMax, "degC", &t_max),
            (Role::Precip, "mm", &precip),
        ] {
            put(format!("{role}_{:02}", m + 1), role, month, units, &layer.with_mask(&water)?)?;
        }
    }

    let manifest_path = root.join("manifest.csv");
    Manifest::new(&root, layers)?.write(&manifest_path)?;
    let config = root.join("config.toml");
    fs::write(&config, config_text(p, &grid))?;
    Ok(SynthDataset { root, manifest: manifest_path, config, grid, water })
}
