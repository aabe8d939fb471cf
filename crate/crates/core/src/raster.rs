//! In-memory rasters and monthly stacks.
//!
//! NaN is the only missing-data value inside the engine. Rasters are
//! immutable once built; every constructor that evaluates a per-cell closure
//! runs it over row bands on the current rayon pool, and since each cell is
//! computed independently the result does not depend on the worker count.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::scalar::Scalar;

pub const MONTHS: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct Raster<T> {
    spec: GridSpec,
    values: Vec<T>,
}

impl<T: Scalar> Raster<T> {
    pub fn new(spec: GridSpec, values: Vec<T>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::DimensionMismatch { expected: spec.len(), found: values.len() });
        }
        Ok(Raster { spec, values })
    }

    pub fn filled(spec: GridSpec, value: T) -> Self {
        let values = vec![value; spec.len()];
        Raster { spec, values }
    }

    pub fn nan(spec: GridSpec) -> Self {
        Self::filled(spec, T::nan())
    }

    /// Evaluates `f(row, col)` for every cell.
    pub fn from_fn<F>(spec: GridSpec, f: F) -> Self
    where
        F: Fn(usize, usize) -> T + Sync,
    {
        Self::from_rows(spec, |row, out| {
            for (col, v) in out.iter_mut().enumerate() {
                *v = f(row, col);
            }
        })
    }

    /// Fills the raster one row at a time; `f` receives the row index and
    /// the row's output slice.
    pub fn from_rows<F>(spec: GridSpec, f: F) -> Self
    where
        F: Fn(usize, &mut [T]) + Sync,
    {
        let mut values = vec![T::zero(); spec.len()];
        values
            .par_chunks_mut(spec.n_cols)
            .enumerate()
            .for_each(|(row, out)| f(row, out));
        Raster { spec, values }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn n_rows(&self) -> usize {
        self.spec.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.spec.n_cols
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> T {
        self.values[row * self.spec.n_cols + col]
    }

    pub fn row(&self, row: usize) -> &[T] {
        let n = self.spec.n_cols;
        &self.values[row * n..(row + 1) * n]
    }

    pub fn map<U: Scalar, F>(&self, f: F) -> Raster<U>
    where
        F: Fn(T) -> U + Sync,
    {
        let n = self.spec.n_cols;
        Raster::from_rows(self.spec.clone(), |row, out| {
            for (o, &v) in out.iter_mut().zip(&self.values[row * n..(row + 1) * n]) {
                *o = f(v);
            }
        })
    }

    /// Cell-wise binary operation; both rasters must share one grid.
    pub fn zip_map<U: Scalar, F>(&self, other: &Raster<T>, f: F) -> Result<Raster<U>>
    where
        F: Fn(T, T) -> U + Sync,
    {
        self.require_same_grid(other)?;
        let n = self.spec.n_cols;
        Ok(Raster::from_rows(self.spec.clone(), |row, out| {
            let a = &self.values[row * n..(row + 1) * n];
            let b = &other.values[row * n..(row + 1) * n];
            for ((o, &x), &y) in out.iter_mut().zip(a).zip(b) {
                *o = f(x, y);
            }
        }))
    }

    pub fn require_same_grid<U>(&self, other: &Raster<U>) -> Result<()> {
        if self.spec != other.spec {
            return Err(Error::GridMismatch(format!(
                "{:?} vs {:?} grids differ",
                self.spec.shape(),
                other.spec.shape()
            )));
        }
        Ok(())
    }

    pub fn nan_mask(&self) -> Vec<bool> {
        self.values.iter().map(|v| v.is_nan()).collect()
    }

    pub fn count_nan(&self) -> usize {
        self.values.iter().filter(|v| v.is_nan()).count()
    }

    /// Sets every cell flagged in `mask` to NaN.
    pub fn with_mask(&self, mask: &[bool]) -> Result<Self> {
        if mask.len() != self.values.len() {
            return Err(Error::DimensionMismatch { expected: self.values.len(), found: mask.len() });
        }
        let values = self
            .values
            .iter()
            .zip(mask)
            .map(|(&v, &m)| if m { T::nan() } else { v })
            .collect();
        Ok(Raster { spec: self.spec.clone(), values })
    }

    pub fn cast<U: Scalar>(&self) -> Raster<U> {
        self.map(|v| U::narrow(v.widen()))
    }

    /// Mean of the finite cells, accumulated in `f64` in row-major order.
    pub fn finite_mean(&self) -> Option<f64> {
        let (sum, n) = self
            .values
            .iter()
            .filter(|v| !v.is_nan())
            .fold((0.0f64, 0usize), |(s, n), v| (s + v.widen(), n + 1));
        (n > 0).then(|| sum / n as f64)
    }
}

/// Twelve monthly rasters (January..December) on one grid with one shared
/// NaN mask.
#[derive(Debug, Clone, PartialEq)]
pub struct MonthlyStack<T> {
    spec: GridSpec,
    months: Vec<Raster<T>>,
}

impl<T: Scalar> MonthlyStack<T> {
    pub fn new(months: Vec<Raster<T>>) -> Result<Self> {
        if months.len() != MONTHS {
            return Err(Error::MonthCount(months.len()));
        }
        let spec = months[0].spec().clone();
        let mask = months[0].nan_mask();
        for (i, m) in months.iter().enumerate().skip(1) {
            if m.spec() != &spec {
                return Err(Error::GridMismatch(format!("month {} is on a different grid", i + 1)));
            }
            if let Some(cell) = m.values().iter().zip(&mask).position(|(v, &nan)| v.is_nan() != nan) {
                return Err(Error::MaskMismatch(format!(
                    "month {} disagrees with January at cell {cell}",
                    i + 1
                )));
            }
        }
        Ok(MonthlyStack { spec, months })
    }

    /// Builds a stack from `f(month_index, row, col)` with month index 0..12.
    pub fn from_fn<F>(spec: GridSpec, f: F) -> Result<Self>
    where
        F: Fn(usize, usize, usize) -> T + Sync,
    {
        let months = (0..MONTHS)
            .map(|m| Raster::from_fn(spec.clone(), |r, c| f(m, r, c)))
            .collect();
        Self::new(months)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn months(&self) -> &[Raster<T>] {
        &self.months
    }

    /// Month by calendar number, 1 = January.
    pub fn month(&self, m: usize) -> &Raster<T> {
        &self.months[m - 1]
    }

    pub fn into_months(self) -> Vec<Raster<T>> {
        self.months
    }

    /// The 12 monthly values of one cell, by flat index.
    #[inline]
    pub fn series(&self, idx: usize) -> [T; MONTHS] {
        std::array::from_fn(|m| self.months[m].values()[idx])
    }

    pub fn nan_mask(&self) -> Vec<bool> {
        self.months[0].nan_mask()
    }

    pub fn map<U: Scalar, F>(&self, f: F) -> MonthlyStack<U>
    where
        F: Fn(T) -> U + Sync,
    {
        MonthlyStack {
            spec: self.spec.clone(),
            months: self.months.iter().map(|r| r.map(&f)).collect(),
        }
    }

    pub fn with_mask(&self, mask: &[bool]) -> Result<Self> {
        let months = self.months.iter().map(|r| r.with_mask(mask)).collect::<Result<Vec<_>>>()?;
        Ok(MonthlyStack { spec: self.spec.clone(), months })
    }
}
