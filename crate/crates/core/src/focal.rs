//! Focal, block and monthly reductions.
//!
//! Every reduction accumulates in `f64`, left to right and top to bottom,
//! so a cell's value never depends on how the grid is split across workers.

use crate::error::{Error, Result};
use crate::raster::{MonthlyStack, Raster, MONTHS};
use crate::scalar::Scalar;

/// Mean over the centred 3×3 window, skipping NaN neighbours.
///
/// A NaN centre stays NaN. Windows are clipped at the grid edge rather than
/// padded, so rim cells average the 4 or 6 cells that exist.
pub fn focal_mean_3x3<T: Scalar>(r: &Raster<T>) -> Raster<T> {
    let (rows, cols) = r.spec().shape();
    Raster::from_rows(r.spec().clone(), |row, out| {
        let r0 = row.saturating_sub(1);
        let r1 = (row + 1).min(rows - 1);
        for (col, o) in out.iter_mut().enumerate() {
            if r.get(row, col).is_nan() {
                *o = T::nan();
                continue;
            }
            let c0 = col.saturating_sub(1);
            let c1 = (col + 1).min(cols - 1);
            let mut sum = 0.0f64;
            let mut n = 0u32;
            for rr in r0..=r1 {
                for &v in &r.row(rr)[c0..=c1] {
                    if !v.is_nan() {
                        sum += v.widen();
                        n += 1;
                    }
                }
            }
            *o = T::narrow(sum / n as f64);
        }
    })
}

/// Mean of each `factor`×`factor` block of finite cells; a block with no
/// finite cell is NaN. The output grid has the same extent and a cell size
/// `factor` times larger.
pub fn block_mean_aggregate<T: Scalar>(r: &Raster<T>, factor: usize) -> Result<Raster<T>> {
    let spec = r.spec().coarsen(factor)?;
    Ok(Raster::from_rows(spec, |orow, out| {
        for (ocol, o) in out.iter_mut().enumerate() {
            let mut sum = 0.0f64;
            let mut n = 0u32;
            for rr in orow * factor..(orow + 1) * factor {
                for &v in &r.row(rr)[ocol * factor..(ocol + 1) * factor] {
                    if !v.is_nan() {
                        sum += v.widen();
                        n += 1;
                    }
                }
            }
            *o = if n == 0 { T::nan() } else { T::narrow(sum / n as f64) };
        }
    }))
}

/// Per-cell reduction over the 12 months. Any NaN month yields NaN.
pub fn stack_reduce<T, F>(s: &MonthlyStack<T>, f: F) -> Raster<T>
where
    T: Scalar,
    F: Fn(&[f64; MONTHS]) -> f64 + Sync,
{
    let cols = s.spec().n_cols;
    Raster::from_rows(s.spec().clone(), |row, out| {
        for (col, o) in out.iter_mut().enumerate() {
            let series = s.series(row * cols + col).map(Scalar::widen);
            *o = if series.iter().any(|v| v.is_nan()) {
                T::nan()
            } else {
                T::narrow(f(&series))
            };
        }
    })
}

pub(crate) fn series_sum(s: &[f64; MONTHS]) -> f64 {
    s.iter().fold(0.0, |acc, &v| acc + v)
}

pub(crate) fn series_min(s: &[f64; MONTHS]) -> f64 {
    s.iter().copied().fold(f64::INFINITY, f64::min)
}

pub(crate) fn series_max(s: &[f64; MONTHS]) -> f64 {
    s.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

pub fn stack_sum<T: Scalar>(s: &MonthlyStack<T>) -> Raster<T> {
    stack_reduce(s, series_sum)
}

pub fn stack_min<T: Scalar>(s: &MonthlyStack<T>) -> Raster<T> {
    stack_reduce(s, series_min)
}

pub fn stack_max<T: Scalar>(s: &MonthlyStack<T>) -> Raster<T> {
    stack_reduce(s, series_max)
}

pub fn stack_mean<T: Scalar>(s: &MonthlyStack<T>) -> Raster<T> {
    stack_reduce(s, |m| series_sum(m) / MONTHS as f64)
}

/// Errors unless `factor` divides both dimensions of `r`.
pub fn check_divisible<T: Scalar>(r: &Raster<T>, factor: usize) -> Result<()> {
    let (rows, cols) = r.spec().shape();
    if factor == 0 || rows % factor != 0 || cols % factor != 0 {
        return Err(Error::NotDivisible { rows, cols, factor });
    }
    Ok(())
}
