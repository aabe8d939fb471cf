//! Bioclimatic covariate engine.
//!
//! Raster model and focal/block/monthly reductions, semantic input checks,
//! temperature–precipitation covariates, potential solar irradiation from a
//! DEM, and GeoTIFF I/O. Map algebra is generic over [`Scalar`]
//! (`f32`/`f64`); the solar model works in `f64`.

pub mod climate;
pub mod covariates;
pub mod error;
pub mod focal;
pub mod grid;
pub mod io;
pub mod raster;
pub mod scalar;
pub mod semap;
pub mod solar;

pub use covariates::{Covariate, CovariateSet, Provenance};
pub use error::{Error, Result};
pub use grid::GridSpec;
pub use raster::{MonthlyStack, Raster, MONTHS};
pub use scalar::Scalar;

pub type Raster64 = Raster<f64>;
pub type Raster32 = Raster<f32>;
pub type MonthlyStack64 = MonthlyStack<f64>;
pub type MonthlyStack32 = MonthlyStack<f32>;
pub type ClimateInputs64 = climate::ClimateInputs<f64>;
pub type DemTriple64 = climate::DemTriple<f64>;
pub type CovariateSet64 = CovariateSet<f64>;
