//! Potential solar irradiation from a DEM.
//!
//! The model is beam-only and atmosphere-free: solar constant × orbital
//! eccentricity × cosine of incidence on the tilted cell, zero whenever the
//! sun is at or below the terrain horizon in its direction. It is a
//! geometric proxy driven by latitude, slope, aspect and shadowing.

pub mod aggregate;
pub mod geometry;
pub mod horizon;
pub mod irradiance;
pub mod terrain;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use aggregate::{
    entransy_proxy, monthly_totals_trapezoid, seasonal_solar_variation, semestral_split, MonthlyIntegrator,
    SolarStack, MONTH_LENGTHS,
};
pub use geometry::{eccentricity_factor, solar_declination, sunset_hour_angle};
pub use horizon::{horizon_angles, HorizonField};
pub use irradiance::{
    central_day_irradiation, central_day_irradiation_with_metric, daily_potential_irradiation, DayPath, Latitude,
    TerrainDerivatives,
};
pub use terrain::{slope_aspect, CellMetric, FLAT_ASPECT};

/// Mid-month (15th) day of year for each month of a 365-day year.
pub const MID_MONTH_DAYS: [u32; 12] = [15, 46, 74, 105, 135, 166, 196, 227, 258, 288, 319, 349];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolarConfig {
    /// Spacing of horizon directions, degrees.
    pub azimuth_step: f64,
    /// Horizon search distance, metres.
    pub horizon_search_radius: f64,
    /// Upper bound on the integration step, hours.
    pub time_step: f64,
    /// W/m².
    pub solar_constant: f64,
    pub central_days: Vec<u32>,
}

impl Default for SolarConfig {
    fn default() -> Self {
        SolarConfig {
            azimuth_step: 5.0,
            horizon_search_radius: 20_000.0,
            time_step: 0.5,
            solar_constant: 1367.0,
            central_days: MID_MONTH_DAYS.to_vec(),
        }
    }
}

impl SolarConfig {
    pub fn n_directions(&self) -> usize {
        (360.0 / self.azimuth_step).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let dirs = 360.0 / self.azimuth_step;
        if !(self.azimuth_step > 0.0) || (dirs - dirs.round()).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "azimuth step {} does not divide 360",
                self.azimuth_step
            )));
        }
        if !(self.time_step > 0.0 && self.time_step <= 1.0) {
            return Err(Error::InvalidConfig(format!("time step {} h must be in (0, 1]", self.time_step)));
        }
        if !(self.horizon_search_radius >= 0.0 && self.horizon_search_radius.is_finite()) {
            return Err(Error::InvalidConfig("horizon search radius must be finite and nonnegative".into()));
        }
        if !(self.solar_constant > 0.0) {
            return Err(Error::InvalidConfig("solar constant must be positive".into()));
        }
        aggregate::check_central_days(&self.central_days)
    }
}
