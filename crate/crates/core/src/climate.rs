//! Temperature, precipitation and elevation covariates.
//!
//! Temperatures are true degrees Celsius throughout; the +100 °C offset is
//! applied only by [`shifted_temps`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::covariates::Covariate;
use crate::error::{Error, Result};
use crate::focal::{focal_mean_3x3, stack_max, stack_mean, stack_min, stack_sum};
use crate::raster::{MonthlyStack, Raster, MONTHS};
use crate::scalar::Scalar;

/// Monthly mean temperature (°C) a month must reach to count as warm.
pub const WARM_MONTH_THRESHOLD: f64 = 10.0;
/// Offset making European temperatures positive.
pub const TEMPERATURE_SHIFT: f64 = 100.0;
/// Denominator floor for precipitation ratios, in mm.
pub const PRECIP_FLOOR_MM: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountingMode {
    /// Count months whose cell-mean temperature passes the threshold.
    MeanOnly,
    /// Count the fraction of the cell's elevation span that passes.
    Fractional,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LapseConfig {
    /// Temperature drop per metre of elevation gain, °C/m.
    pub lapse_rate: f64,
    pub counting_mode: CountingMode,
}

impl Default for LapseConfig {
    fn default() -> Self {
        LapseConfig { lapse_rate: 0.0065, counting_mode: CountingMode::Fractional }
    }
}

impl LapseConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lapse_rate > 0.0 && self.lapse_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!("lapse rate {} must be positive", self.lapse_rate)));
        }
        Ok(())
    }
}

/// Minimum, mean and maximum elevation of each cell, in metres.
#[derive(Debug, Clone, PartialEq)]
pub struct DemTriple<T> {
    pub e_min: Raster<T>,
    pub e_mean: Raster<T>,
    pub e_max: Raster<T>,
}

impl<T: Scalar> DemTriple<T> {
    pub fn new(e_min: Raster<T>, e_mean: Raster<T>, e_max: Raster<T>) -> Result<Self> {
        e_min.require_same_grid(&e_mean)?;
        e_min.require_same_grid(&e_max)?;
        Ok(DemTriple { e_min, e_mean, e_max })
    }

    pub fn with_mask(&self, mask: &[bool]) -> Result<Self> {
        Ok(DemTriple {
            e_min: self.e_min.with_mask(mask)?,
            e_mean: self.e_mean.with_mask(mask)?,
            e_max: self.e_max.with_mask(mask)?,
        })
    }
}

/// Monthly climate stacks plus the elevation triple, all on one grid.
#[derive(Debug, Clone)]
pub struct ClimateInputs<T> {
    pub t_avg: MonthlyStack<T>,
    pub t_min: MonthlyStack<T>,
    pub t_max: MonthlyStack<T>,
    pub p: MonthlyStack<T>,
    pub dem: DemTriple<T>,
}

impl<T: Scalar> ClimateInputs<T> {
    pub fn new(
        t_avg: MonthlyStack<T>,
        t_min: MonthlyStack<T>,
        t_max: MonthlyStack<T>,
        p: MonthlyStack<T>,
        dem: DemTriple<T>,
    ) -> Result<Self> {
        let spec = t_avg.spec();
        for (name, s) in [("t_min", t_min.spec()), ("t_max", t_max.spec()), ("precip", p.spec())] {
            if s != spec {
                return Err(Error::GridMismatch(format!("{name} stack is not on the t_avg grid")));
            }
        }
        if dem.e_min.spec() != spec {
            return Err(Error::GridMismatch("DEM triple is not on the climate grid".into()));
        }
        Ok(ClimateInputs { t_avg, t_min, t_max, p, dem })
    }

    /// Union of the NaN masks of every input layer.
    pub fn common_mask(&self) -> Vec<bool> {
        let layers = [
            &self.t_avg.months()[0],
            &self.t_min.months()[0],
            &self.t_max.months()[0],
            &self.p.months()[0],
            &self.dem.e_min,
            &self.dem.e_mean,
            &self.dem.e_max,
        ];
        (0..self.t_avg.spec().len())
            .map(|i| layers.iter().any(|r| r.values()[i].is_nan()))
            .collect()
    }

    /// Every input with the common mask applied, so each output inherits it.
    pub fn masked(&self) -> Result<Self> {
        let mask = self.common_mask();
        Ok(ClimateInputs {
            t_avg: self.t_avg.with_mask(&mask)?,
            t_min: self.t_min.with_mask(&mask)?,
            t_max: self.t_max.with_mask(&mask)?,
            p: self.p.with_mask(&mask)?,
            dem: self.dem.with_mask(&mask)?,
        })
    }
}

fn require_stack_grid<T: Scalar>(a: &MonthlyStack<T>, b: &MonthlyStack<T>) -> Result<()> {
    if a.spec() != b.spec() {
        return Err(Error::GridMismatch("monthly stacks are on different grids".into()));
    }
    Ok(())
}

/// Annual total, driest-month and wettest-month precipitation.
pub fn base_precip<T: Scalar>(p: &MonthlyStack<T>) -> (Raster<T>, Raster<T>, Raster<T>) {
    (stack_sum(p), stack_min(p), stack_max(p))
}

/// Annual mean, coldest-month and warmest-month temperature.
pub fn base_temp<T: Scalar>(t_avg: &MonthlyStack<T>) -> (Raster<T>, Raster<T>, Raster<T>) {
    (stack_mean(t_avg), stack_min(t_avg), stack_max(t_avg))
}

/// Nordenskiöld index `T_warm + 0.1·T_cold − 9`; negative under tundra.
pub fn tundra_index<T: Scalar>(t_warm: &Raster<T>, t_cold: &Raster<T>) -> Result<Raster<T>> {
    t_warm.zip_map(t_cold, |w, c| T::narrow(w.widen() + 0.1 * c.widen() - 9.0))
}

pub fn exp_tundra<T: Scalar>(tundra: &Raster<T>) -> Raster<T> {
    tundra.map(|v| T::narrow(v.widen().exp()))
}

/// Mean over the year of the monthly `t_max − t_min` range.
pub fn monthly_temp_range_mean<T: Scalar>(t_min: &MonthlyStack<T>, t_max: &MonthlyStack<T>) -> Result<Raster<T>> {
    require_stack_grid(t_min, t_max)?;
    let cols = t_min.spec().n_cols;
    Ok(Raster::from_rows(t_min.spec().clone(), |row, out| {
        for (col, o) in out.iter_mut().enumerate() {
            let idx = row * cols + col;
            let lo = t_min.series(idx);
            let hi = t_max.series(idx);
            let sum = (0..MONTHS).fold(0.0f64, |s, m| s + (hi[m].widen() - lo[m].widen()));
            *o = T::narrow(sum / MONTHS as f64);
        }
    }))
}

/// 3×3 focal mean of the per-cell elevation range.
pub fn elevation_range_3x3<T: Scalar>(dem: &DemTriple<T>) -> Result<Raster<T>> {
    let range = dem.e_max.zip_map(&dem.e_min, |hi, lo| T::narrow(hi.widen() - lo.widen()))?;
    Ok(focal_mean_3x3(&range))
}

/// Precipitation seasonality normalised by the driest and by the wettest
/// month. Denominators are floored at 1 mm.
pub fn seasonal_precip_variation<T: Scalar>(
    p_dry: &Raster<T>,
    p_wet: &Raster<T>,
) -> Result<(Raster<T>, Raster<T>)> {
    let by_dry = p_dry.zip_map(p_wet, |d, w| {
        let (d, w) = (d.widen(), w.widen());
        T::narrow((w - d) / d.max(PRECIP_FLOOR_MM))
    })?;
    let by_wet = p_dry.zip_map(p_wet, |d, w| {
        let (d, w) = (d.widen(), w.widen());
        T::narrow((w - d) / w.max(PRECIP_FLOOR_MM))
    })?;
    Ok((by_dry, by_wet))
}

/// Number of months with `P ≤ 2·T` (Gaussen dry months).
pub fn dry_month_count<T: Scalar>(p: &MonthlyStack<T>, t_avg: &MonthlyStack<T>) -> Result<Raster<T>> {
    require_stack_grid(p, t_avg)?;
    let cols = p.spec().n_cols;
    Ok(Raster::from_rows(p.spec().clone(), |row, out| {
        for (col, o) in out.iter_mut().enumerate() {
            let idx = row * cols + col;
            let (ps, ts) = (p.series(idx), t_avg.series(idx));
            if ps[0].is_nan() || ts[0].is_nan() {
                *o = T::nan();
                continue;
            }
            let n = (0..MONTHS).filter(|&m| ps[m].widen() <= 2.0 * ts[m].widen()).count();
            *o = T::narrow(n as f64);
        }
    }))
}

/// Share of one month that counts as warm for a cell with elevation span
/// `[e_min, e_max]`, assuming elevation is uniform over that span and
/// temperature falls linearly with height from `t_mean` at `e_mean`.
pub fn warm_fraction(t_mean: f64, e_min: f64, e_mean: f64, e_max: f64, lapse_rate: f64) -> f64 {
    if !(e_max > e_min) {
        return if t_mean >= WARM_MONTH_THRESHOLD { 1.0 } else { 0.0 };
    }
    // highest elevation still at or above the threshold
    let limit = e_mean + (t_mean - WARM_MONTH_THRESHOLD) / lapse_rate;
    ((limit - e_min) / (e_max - e_min)).clamp(0.0, 1.0)
}

/// Number of months with mean temperature ≥ 10 °C, optionally spread over
/// the sub-cell elevation span with a lapse rate.
pub fn warm_month_count<T: Scalar>(
    t_avg: &MonthlyStack<T>,
    dem: &DemTriple<T>,
    cfg: &LapseConfig,
) -> Result<Raster<T>> {
    cfg.validate()?;
    if dem.e_min.spec() != t_avg.spec() {
        return Err(Error::GridMismatch("DEM triple is not on the temperature grid".into()));
    }
    let cols = t_avg.spec().n_cols;
    let mode = cfg.counting_mode;
    let lapse = cfg.lapse_rate;
    Ok(Raster::from_rows(t_avg.spec().clone(), |row, out| {
        for (col, o) in out.iter_mut().enumerate() {
            let idx = row * cols + col;
            let ts = t_avg.series(idx);
            let (lo, mean, hi) = (
                dem.e_min.values()[idx].widen(),
                dem.e_mean.values()[idx].widen(),
                dem.e_max.values()[idx].widen(),
            );
            if ts[0].is_nan() || (mode == CountingMode::Fractional && (lo.is_nan() || mean.is_nan() || hi.is_nan())) {
                *o = T::nan();
                continue;
            }
            let count = match mode {
                CountingMode::MeanOnly => {
                    ts.iter().filter(|t| t.widen() >= WARM_MONTH_THRESHOLD).count() as f64
                }
                CountingMode::Fractional => ts
                    .iter()
                    .fold(0.0, |acc, t| acc + warm_fraction(t.widen(), lo, mean, hi, lapse)),
            };
            *o = T::narrow(count);
        }
    }))
}

/// Annual and coldest-month temperature shifted by +100 °C.
pub fn shifted_temps<T: Scalar>(t: &Raster<T>, t_cold: &Raster<T>) -> (Raster<T>, Raster<T>) {
    let shift = |v: T| T::narrow(v.widen() + TEMPERATURE_SHIFT);
    (t.map(shift), t_cold.map(shift))
}

/// Shifted temperature divided by `log10(P + 1)`, with the denominator
/// floored at `log10(2)`.
pub fn temp_per_rain_order<T: Scalar>(t_plus100: &Raster<T>, p: &Raster<T>) -> Result<Raster<T>> {
    let floor = std::f64::consts::LOG10_2;
    t_plus100.zip_map(p, |t, p| T::narrow(t.widen() / (p.widen() + 1.0).log10().max(floor)))
}

/// All temperature and precipitation covariates plus the elevation range:
/// eight base layers and derived layers 1 and 5–12.
///
/// The union NaN mask of the inputs is applied first, so every output is
/// NaN on exactly that mask.
pub fn climate_covariates<T: Scalar>(
    inputs: &ClimateInputs<T>,
    lapse: &LapseConfig,
) -> Result<BTreeMap<Covariate, Raster<T>>> {
    let inputs = inputs.masked()?;
    let (p, p_dry, p_wet) = base_precip(&inputs.p);
    let (t, t_cold, t_warm) = base_temp(&inputs.t_avg);
    let tundra = tundra_index(&t_warm, &t_cold)?;
    let t_range = monthly_temp_range_mean(&inputs.t_min, &inputs.t_max)?;
    let er = elevation_range_3x3(&inputs.dem)?;
    let (dp_dry, dp_wet) = seasonal_precip_variation(&p_dry, &p_wet)?;
    let dry = dry_month_count(&inputs.p, &inputs.t_avg)?;
    let warm = warm_month_count(&inputs.t_avg, &inputs.dem, lapse)?;
    let (t100, t_cold100) = shifted_temps(&t, &t_cold);
    let t_per_rain = temp_per_rain_order(&t100, &p)?;
    let exp_t = exp_tundra(&tundra);

    let mut out = BTreeMap::new();
    out.insert(Covariate::PrecipAnnual, p);
    out.insert(Covariate::PrecipDriest, p_dry);
    out.insert(Covariate::PrecipWettest, p_wet);
    out.insert(Covariate::TempAnnual, t);
    out.insert(Covariate::TempColdest, t_cold);
    out.insert(Covariate::TempWarmest, t_warm);
    out.insert(Covariate::Tundra, tundra);
    out.insert(Covariate::TempRangeMean, t_range);
    out.insert(Covariate::ElevationRange3x3, er);
    out.insert(Covariate::PrecipSeasonalityDry, dp_dry);
    out.insert(Covariate::PrecipSeasonalityWet, dp_wet);
    out.insert(Covariate::DryMonths, dry);
    out.insert(Covariate::TempPerRainOrder, t_per_rain);
    out.insert(Covariate::TempAnnualShifted, t100);
    out.insert(Covariate::TempColdestShifted, t_cold100);
    out.insert(Covariate::TundraExp, exp_t);
    out.insert(Covariate::WarmMonths, warm);
    Ok(out)
}
