//! Sun–earth geometry for a 365-day climatological year.

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const DAYS_PER_YEAR: u32 = 365;
/// Maximum declination, degrees.
pub const OBLIQUITY_DEG: f64 = 23.45;

pub fn check_day(day: u32) -> Result<()> {
    if !(1..=DAYS_PER_YEAR).contains(&day) {
        return Err(Error::DayOutOfRange(day));
    }
    Ok(())
}

/// Solar declination (radians) by Cooper's formula.
pub fn solar_declination(day: u32) -> Result<f64> {
    check_day(day)?;
    let arg = 2.0 * PI * (284.0 + day as f64) / DAYS_PER_YEAR as f64;
    Ok(OBLIQUITY_DEG.to_radians() * arg.sin())
}

/// Earth–sun distance correction factor.
pub fn eccentricity_factor(day: u32) -> Result<f64> {
    check_day(day)?;
    Ok(1.0 + 0.033 * (2.0 * PI * day as f64 / DAYS_PER_YEAR as f64).cos())
}

/// Hour angle of sunset (radians, 0..=π). 0 means polar night, π polar day.
pub fn sunset_hour_angle(lat: f64, decl: f64) -> f64 {
    let x = -lat.tan() * decl.tan();
    if x >= 1.0 {
        0.0
    } else if x <= -1.0 {
        PI
    } else {
        x.acos()
    }
}

/// Direction to the sun as a unit vector in local (east, north, up)
/// coordinates. `hour_angle` is negative before solar noon.
pub fn sun_direction(lat: f64, decl: f64, hour_angle: f64) -> [f64; 3] {
    let (sin_lat, cos_lat) = lat.sin_cos();
    let (sin_dec, cos_dec) = decl.sin_cos();
    let (sin_h, cos_h) = hour_angle.sin_cos();
    [
        -cos_dec * sin_h,
        sin_dec * cos_lat - cos_dec * sin_lat * cos_h,
        sin_lat * sin_dec + cos_lat * cos_dec * cos_h,
    ]
}

/// Elevation above the horizontal and azimuth (clockwise from north, in
/// `[0, 2π)`) of a direction vector.
pub fn elevation_azimuth(dir: [f64; 3]) -> (f64, f64) {
    let elevation = dir[2].clamp(-1.0, 1.0).asin();
    let azimuth = dir[0].atan2(dir[1]).rem_euclid(2.0 * PI);
    (elevation, azimuth)
}
