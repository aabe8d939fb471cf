//! Semantic constraints on input layers: nonnegativity and the
//! min ≤ mean ≤ max ordering of attribute triples.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{MonthlyStack, Raster};
use crate::scalar::Scalar;

/// Outcome of checking (and possibly repairing) one constraint on one layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub constraint_name: String,
    pub violations: u64,
    pub repaired: u64,
    pub max_violation_magnitude: f64,
}

impl ConstraintReport {
    pub fn clean(name: impl Into<String>) -> Self {
        ConstraintReport {
            constraint_name: name.into(),
            violations: 0,
            repaired: 0,
            max_violation_magnitude: 0.0,
        }
    }

    /// Folds another report for the same constraint into this one.
    pub fn absorb(&mut self, other: &ConstraintReport) {
        self.violations += other.violations;
        self.repaired += other.repaired;
        self.max_violation_magnitude = self.max_violation_magnitude.max(other.max_violation_magnitude);
    }

    pub fn into_strict(self) -> Result<Self> {
        if self.violations > 0 {
            return Err(Error::ConstraintViolation {
                constraint: self.constraint_name,
                violations: self.violations,
                magnitude: self.max_violation_magnitude,
            });
        }
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepairMode {
    /// Sort each cell's triple into ascending order.
    Repair,
    /// Fail on the first layer with any out-of-order cell.
    Strict,
}

/// Counts finite cells below zero. Does not modify `r`.
pub fn check_nonnegative<T: Scalar>(name: &str, r: &Raster<T>) -> ConstraintReport {
    let mut report = ConstraintReport::clean(format!("{name}::nonnegative"));
    for v in r.values().iter().map(|v| v.widen()) {
        if v < 0.0 {
            report.violations += 1;
            report.max_violation_magnitude = report.max_violation_magnitude.max(-v);
        }
    }
    report
}

pub fn check_nonnegative_stack<T: Scalar>(name: &str, s: &MonthlyStack<T>) -> ConstraintReport {
    let mut report = ConstraintReport::clean(format!("{name}::nonnegative"));
    for m in s.months() {
        report.absorb(&check_nonnegative(name, m));
    }
    report
}

/// Largest pairwise inversion of a triple, 0 when ordered.
fn inversion(lo: f64, mid: f64, hi: f64) -> f64 {
    (lo - mid).max(mid - hi).max(lo - hi).max(0.0)
}

fn sort3(a: f64, b: f64, c: f64) -> (f64, f64, f64) {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    let (b, c) = if b <= c { (b, c) } else { (c, b) };
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    (a, b, c)
}

pub type Triple<T> = (Raster<T>, Raster<T>, Raster<T>);

/// Enforces `lo ≤ mid ≤ hi` per cell.
///
/// In repair mode each out-of-order cell is replaced by the ascending sort
/// of its three values; in strict mode any out-of-order cell is an error.
/// The three rasters must share a grid and a NaN mask.
pub fn repair_ordered_triple<T: Scalar>(
    name: &str,
    lo: &Raster<T>,
    mid: &Raster<T>,
    hi: &Raster<T>,
    mode: RepairMode,
) -> Result<(Triple<T>, ConstraintReport)> {
    lo.require_same_grid(mid)?;
    lo.require_same_grid(hi)?;
    let (a, b, c) = (lo.values(), mid.values(), hi.values());
    for i in 0..a.len() {
        let nans = [a[i].is_nan(), b[i].is_nan(), c[i].is_nan()];
        if nans[0] != nans[1] || nans[0] != nans[2] {
            return Err(Error::MaskMismatch(format!("{name}: triple masks differ at cell {i}")));
        }
    }

    let mut report = ConstraintReport::clean(format!("{name}::ordered"));
    let (mut out_lo, mut out_mid, mut out_hi) = (a.to_vec(), b.to_vec(), c.to_vec());
    for i in 0..a.len() {
        let (x, y, z) = (a[i].widen(), b[i].widen(), c[i].widen());
        if x.is_nan() {
            continue;
        }
        let inv = inversion(x, y, z);
        if inv > 0.0 {
            report.violations += 1;
            report.max_violation_magnitude = report.max_violation_magnitude.max(inv);
            let (s0, s1, s2) = sort3(x, y, z);
            out_lo[i] = T::narrow(s0);
            out_mid[i] = T::narrow(s1);
            out_hi[i] = T::narrow(s2);
            report.repaired += 1;
        }
    }
    if mode == RepairMode::Strict {
        report = report.into_strict()?;
    }
    let spec = lo.spec().clone();
    Ok((
        (
            Raster::new(spec.clone(), out_lo)?,
            Raster::new(spec.clone(), out_mid)?,
            Raster::new(spec, out_hi)?,
        ),
        report,
    ))
}

pub type StackTriple<T> = (MonthlyStack<T>, MonthlyStack<T>, MonthlyStack<T>);

/// Applies [`repair_ordered_triple`] month by month and merges the reports.
pub fn repair_ordered_stacks<T: Scalar>(
    name: &str,
    lo: &MonthlyStack<T>,
    mid: &MonthlyStack<T>,
    hi: &MonthlyStack<T>,
    mode: RepairMode,
) -> Result<(StackTriple<T>, ConstraintReport)> {
    let mut report = ConstraintReport::clean(format!("{name}::ordered"));
    let (mut los, mut mids, mut his) = (Vec::new(), Vec::new(), Vec::new());
    for m in 0..lo.months().len() {
        let ((l, md, h), r) = repair_ordered_triple(
            name,
            &lo.months()[m],
            &mid.months()[m],
            &hi.months()[m],
            RepairMode::Repair,
        )?;
        report.absorb(&r);
        los.push(l);
        mids.push(md);
        his.push(h);
    }
    if mode == RepairMode::Strict {
        report = report.into_strict()?;
    }
    Ok((
        (MonthlyStack::new(los)?, MonthlyStack::new(mids)?, MonthlyStack::new(his)?),
        report,
    ))
}

/// Writes reports as CSV, one row per constraint.
pub fn write_reports_csv<W: std::io::Write>(w: W, reports: &[ConstraintReport]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in reports {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}
