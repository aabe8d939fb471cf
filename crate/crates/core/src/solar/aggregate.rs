//! From central-day maps to monthly, semestral and annual totals.

use rayon::prelude::*;

use super::SolarConfig;
use crate::error::{Error, Result};
use crate::focal::{block_mean_aggregate, focal_mean_3x3};
use crate::grid::GridSpec;
use crate::raster::{Raster, MONTHS};

pub const MONTH_LENGTHS: [u32; MONTHS] = [31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31];
const YEAR: f64 = 365.0;

/// Day-of-year interval `[start, end)` of each month in continuous days,
/// with day `n` occupying `[n - 1, n)`.
pub fn month_bounds() -> [(f64, f64); MONTHS] {
    let mut start = 0.0;
    std::array::from_fn(|m| {
        let b = (start, start + MONTH_LENGTHS[m] as f64);
        start = b.1;
        b
    })
}

/// Integrates the periodic piecewise-linear interpolant of 12 central-day
/// samples over each calendar month.
///
/// Samples sit at the middle of their day. Month totals are weighted sums
/// of the samples, taken relative to the month's heaviest node so that a
/// constant series integrates to exactly `value × days`. The annual total
/// is the left-to-right sum of the twelve months.
#[derive(Debug, Clone)]
pub struct MonthlyIntegrator {
    /// (node, weight) pairs per month; the first node is the reference.
    month_weights: Vec<Vec<(usize, f64)>>,
}

impl MonthlyIntegrator {
    pub fn new(central_days: &[u32]) -> Result<Self> {
        check_central_days(central_days)?;
        let nodes: Vec<f64> = central_days.iter().map(|&d| d as f64 - 0.5).collect();
        let mut month_weights = Vec::with_capacity(MONTHS);
        for (a, b) in month_bounds() {
            let mut w = vec![0.0; MONTHS];
            // segments k -> k+1 with the wraparound segment shifted by one period
            for k in 0..MONTHS {
                let x0 = nodes[k];
                let x1 = if k + 1 < MONTHS { nodes[k + 1] } else { nodes[0] + YEAR };
                let k1 = (k + 1) % MONTHS;
                for shift in [-YEAR, 0.0] {
                    let (s0, s1) = (x0 + shift, x1 + shift);
                    let u = a.max(s0);
                    let v = b.min(s1);
                    if v <= u {
                        continue;
                    }
                    let g = s1 - s0;
                    let tu = (u - s0) / g;
                    let tv = (v - s0) / g;
                    let half = (v - u) / 2.0;
                    w[k] += half * (2.0 - tu - tv);
                    w[k1] += half * (tu + tv);
                }
            }
            let mut pairs: Vec<(usize, f64)> = w.into_iter().enumerate().filter(|(_, x)| *x != 0.0).collect();
            // reference node: the one carrying the most weight
            let lead = pairs
                .iter()
                .enumerate()
                .max_by(|x, y| x.1 .1.total_cmp(&y.1 .1))
                .map(|(i, _)| i)
                .unwrap_or(0);
            pairs.swap(0, lead);
            month_weights.push(pairs);
        }
        Ok(MonthlyIntegrator { month_weights })
    }

    /// Integral of the interpolant over the whole year.
    pub fn annual(&self, samples: &[f64; MONTHS]) -> f64 {
        self.months(samples).iter().fold(0.0, |acc, &m| acc + m)
    }

    /// Integral of the interpolant over each calendar month.
    pub fn months(&self, samples: &[f64; MONTHS]) -> [f64; MONTHS] {
        std::array::from_fn(|m| {
            let weights = &self.month_weights[m];
            let reference = samples[weights[0].0];
            let rest = weights.iter().fold(0.0, |acc, &(k, w)| acc + w * (samples[k] - reference));
            MONTH_LENGTHS[m] as f64 * reference + rest
        })
    }
}

pub fn check_central_days(days: &[u32]) -> Result<()> {
    if days.len() != MONTHS {
        return Err(Error::InvalidConfig(format!("need 12 central days, got {}", days.len())));
    }
    if days.iter().any(|&d| !(1..=365).contains(&d)) || days.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig(format!("central days {days:?} must increase strictly within 1..=365")));
    }
    Ok(())
}

/// Monthly irradiation totals and their semestral and annual sums, Wh/m².
#[derive(Debug, Clone)]
pub struct SolarStack {
    pub s_month: Vec<Raster<f64>>,
    pub s_light: Raster<f64>,
    pub s_dark: Raster<f64>,
    pub s_annual: Raster<f64>,
}

/// Monthly totals and the annual integral per cell.
pub fn monthly_totals_trapezoid(daily: &[Raster<f64>], cfg: &SolarConfig) -> Result<(Vec<Raster<f64>>, Raster<f64>)> {
    if daily.len() != MONTHS {
        return Err(Error::MonthCount(daily.len()));
    }
    for d in &daily[1..] {
        daily[0].require_same_grid(d)?;
    }
    let integrator = MonthlyIntegrator::new(&cfg.central_days)?;
    let spec = daily[0].spec().clone();
    let cells: Vec<([f64; MONTHS], f64)> = (0..spec.len())
        .into_par_iter()
        .map(|i| {
            let samples: [f64; MONTHS] = std::array::from_fn(|k| daily[k].values()[i]);
            if samples.iter().any(|v| v.is_nan()) {
                return ([f64::NAN; MONTHS], f64::NAN);
            }
            let months = integrator.months(&samples);
            (months, months.iter().fold(0.0, |acc, &m| acc + m))
        })
        .collect();
    let months = (0..MONTHS)
        .map(|m| Raster::new(spec.clone(), cells.iter().map(|c| c.0[m]).collect()))
        .collect::<Result<Vec<_>>>()?;
    let annual = Raster::new(spec, cells.iter().map(|c| c.1).collect())?;
    Ok((months, annual))
}

/// Per cell, sums of the six largest (light) and six smallest (dark)
/// monthly totals, and their sum.
pub fn semestral_split(months: &[Raster<f64>]) -> Result<(Raster<f64>, Raster<f64>, Raster<f64>)> {
    if months.len() != MONTHS {
        return Err(Error::MonthCount(months.len()));
    }
    for m in &months[1..] {
        months[0].require_same_grid(m)?;
    }
    let spec = months[0].spec().clone();
    let split = |i: usize| -> (f64, f64) {
        let mut v: [f64; MONTHS] = std::array::from_fn(|k| months[k].values()[i]);
        if v.iter().any(|x| x.is_nan()) {
            return (f64::NAN, f64::NAN);
        }
        v.sort_by(f64::total_cmp);
        let dark = v[..6].iter().fold(0.0, |a, &x| a + x);
        let light = v[6..].iter().fold(0.0, |a, &x| a + x);
        (light, dark)
    };
    let light = Raster::from_fn(spec.clone(), |r, c| split(r * spec.n_cols + c).0);
    let dark = Raster::from_fn(spec.clone(), |r, c| split(r * spec.n_cols + c).1);
    let annual = light.zip_map(&dark, |l, d| l + d)?;
    Ok((light, dark, annual))
}

/// Seasonal contrast of irradiation from 3×3-smoothed semesters:
/// `(light − dark) / dark`, NaN where the smoothed dark total is 0.
pub fn seasonal_solar_variation(s_light: &Raster<f64>, s_dark: &Raster<f64>) -> Result<Raster<f64>> {
    let light = focal_mean_3x3(s_light);
    let dark = focal_mean_3x3(s_dark);
    light.zip_map(&dark, |l, d| if d == 0.0 { f64::NAN } else { (l - d) / d })
}

/// Annual irradiation times mean monthly temperature range.
pub fn entransy_proxy(s_annual: &Raster<f64>, delta_t: &Raster<f64>) -> Result<Raster<f64>> {
    s_annual.zip_map(delta_t, |s, t| s * t)
}

impl SolarStack {
    /// Builds the stack from central-day maps on the fine grid and
    /// harmonises it to the grid `factor` times coarser by block means.
    /// Semesters are ranked per fine cell before aggregation.
    pub fn from_daily(daily: &[Raster<f64>], cfg: &SolarConfig, factor: usize) -> Result<Self> {
        let (months, _) = monthly_totals_trapezoid(daily, cfg)?;
        let (light, dark, _) = semestral_split(&months)?;
        let s_month = months
            .iter()
            .map(|m| block_mean_aggregate(m, factor))
            .collect::<Result<Vec<_>>>()?;
        let s_light = block_mean_aggregate(&light, factor)?;
        let s_dark = block_mean_aggregate(&dark, factor)?;
        let s_annual = s_light.zip_map(&s_dark, |l, d| l + d)?;
        Ok(SolarStack { s_month, s_light, s_dark, s_annual })
    }

    pub fn spec(&self) -> &GridSpec {
        self.s_light.spec()
    }

    pub fn with_mask(&self, mask: &[bool]) -> Result<Self> {
        Ok(SolarStack {
            s_month: self.s_month.iter().map(|m| m.with_mask(mask)).collect::<Result<_>>()?,
            s_light: self.s_light.with_mask(mask)?,
            s_dark: self.s_dark.with_mask(mask)?,
            s_annual: self.s_annual.with_mask(mask)?,
        })
    }
}
