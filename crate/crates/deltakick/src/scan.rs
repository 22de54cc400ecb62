//! Parameter grids and box-constrained maximisation over any [`ParamSet`].

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numeric::nelder_mead_max;
use crate::sequence::{GainReport, ParamSet};

/// One scanned parameter and its values.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanAxis {
    pub name: String,
    pub values: Vec<f64>,
}

impl ScanAxis {
    /// `n` evenly spaced values from `lo` to `hi` inclusive. A single value
    /// sits at `lo`.
    pub fn linspace(name: &str, lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument(format!("axis '{name}' has no points")));
        }
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::InvalidArgument(format!("axis '{name}' has non-finite bounds [{lo}, {hi}]")));
        }
        let values =
            if n == 1 { vec![lo] } else { (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect() };
        Ok(ScanAxis { name: name.to_string(), values })
    }

    fn check<P: ParamSet>(&self, base: &P) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::InvalidArgument(format!("axis '{}' has no points", self.name)));
        }
        let rising = self.values.windows(2).all(|w| w[1] > w[0]);
        let falling = self.values.windows(2).all(|w| w[1] < w[0]);
        if !(rising || falling) {
            return Err(Error::InvalidArgument(format!("axis '{}' is not monotone", self.name)));
        }
        base.clone().set_param(&self.name, self.values[0])
    }
}

/// One grid point: axis values, then either a report or the failure.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanRow {
    pub point: Vec<f64>,
    pub outcome: std::result::Result<GainReport, Error>,
}

impl ScanRow {
    /// Gain, or NaN for a failed point.
    pub fn gain(&self) -> f64 {
        self.outcome.as_ref().map_or(f64::NAN, |r| r.gain)
    }
}

/// Long-format scan result, rows in row-major order of the axes (last axis
/// fastest).
#[derive(Clone, Debug, PartialEq)]
pub struct ScanTable {
    pub axes: Vec<String>,
    pub rows: Vec<ScanRow>,
}

impl ScanTable {
    /// Axis names followed by the report columns and an error tag.
    pub fn header(&self) -> Vec<String> {
        let mut h = self.axes.clone();
        h.extend(["tau1", "tau_ai", "tau2", "gain", "gain_db", "error"].map(String::from));
        h
    }

    /// Row fields in [`ScanTable::header`] order; failed points carry NaN
    /// numbers and the error text.
    pub fn record(&self, row: &ScanRow) -> Vec<String> {
        let mut out: Vec<String> = row.point.iter().map(|v| v.to_string()).collect();
        match &row.outcome {
            Ok(r) => {
                out.extend([r.tau1, r.tau_ai, r.tau2].map(|v| format!("{v:e}")));
                out.push(r.gain.to_string());
                out.push(r.gain_db.to_string());
                out.push(String::new());
            }
            Err(e) => {
                out.extend(std::iter::repeat("NaN".to_string()).take(5));
                out.push(e.to_string());
            }
        }
        out
    }
}

/// Evaluates `base` at every point of the Cartesian product of one or two
/// axes, in parallel. A failing point becomes a row with its error instead
/// of aborting the scan; results do not depend on the thread count.
pub fn scan_grid<P: ParamSet>(base: &P, axes: &[ScanAxis]) -> Result<ScanTable> {
    if axes.is_empty() || axes.len() > 2 {
        return Err(Error::InvalidArgument(format!("a scan takes one or two axes, got {}", axes.len())));
    }
    if axes.len() == 2 && axes[0].name == axes[1].name {
        return Err(Error::InvalidArgument(format!("axis '{}' given twice", axes[0].name)));
    }
    for axis in axes {
        axis.check(base)?;
    }
    let points: Vec<Vec<f64>> = match axes {
        [a] => a.values.iter().map(|&x| vec![x]).collect(),
        [a, b] => a.values.iter().flat_map(|&x| b.values.iter().map(move |&y| vec![x, y])).collect(),
        _ => unreachable!(),
    };
    let rows = points
        .into_par_iter()
        .map(|point| {
            let outcome = evaluate_at(base, axes.iter().map(|a| a.name.as_str()), &point);
            ScanRow { point, outcome }
        })
        .collect();
    Ok(ScanTable { axes: axes.iter().map(|a| a.name.clone()).collect(), rows })
}

fn evaluate_at<'a, P: ParamSet>(base: &P, names: impl Iterator<Item = &'a str>, point: &[f64]) -> Result<GainReport> {
    let mut p = base.clone();
    for (name, &v) in names.zip(point) {
        p.set_param(name, v)?;
    }
    p.evaluate()
}

/// Number of random restarts after the start at the box centre.
pub const RESTARTS: usize = 3;

/// Objective evaluations allowed per start.
pub const EVALS_PER_START: usize = 400;

/// Best point found for the gain of `base` over a box.
#[derive(Clone, Debug, PartialEq)]
pub struct Optimum {
    pub params: Vec<f64>,
    pub gain: f64,
}

/// Derivative-free maximisation of the gain over `free` parameters within
/// `bounds`: a simplex search from the box centre plus [`RESTARTS`] starts
/// drawn from a generator seeded with `seed`. Failed evaluations count as
/// worse than any success. The result is the best point seen, with no claim
/// of global optimality.
pub fn maximize<P: ParamSet>(base: &P, free: &[&str], bounds: &[(f64, f64)], seed: u64) -> Result<Optimum> {
    if free.is_empty() || free.len() != bounds.len() {
        return Err(Error::InvalidArgument(format!(
            "need one bound per free parameter, got {} parameters and {} bounds",
            free.len(),
            bounds.len()
        )));
    }
    for (name, &(lo, hi)) in free.iter().zip(bounds) {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::InvalidArgument(format!("bounds for '{name}' must be finite with lo <= hi")));
        }
        base.clone().set_param(name, lo)?;
    }
    let lower: Vec<f64> = bounds.iter().map(|b| b.0).collect();
    let upper: Vec<f64> = bounds.iter().map(|b| b.1).collect();
    let objective = |x: &[f64]| evaluate_at(base, free.iter().copied(), x).map_or(f64::NAN, |r| r.gain);

    if lower == upper {
        let gain = objective(&lower);
        return if gain.is_finite() {
            Ok(Optimum { params: lower, gain })
        } else {
            Err(Error::Optimization("the only admissible point failed to evaluate".into()))
        };
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts = vec![lower.iter().zip(&upper).map(|(a, b)| 0.5 * (a + b)).collect::<Vec<f64>>()];
    for _ in 0..RESTARTS {
        starts.push(lower.iter().zip(&upper).map(|(&a, &b)| if a < b { rng.random_range(a..=b) } else { a }).collect());
    }
    let mut best: Option<Optimum> = None;
    for start in starts {
        let (x, v) = nelder_mead_max(&objective, &start, &lower, &upper, EVALS_PER_START);
        if v.is_finite() && best.as_ref().map_or(true, |b| v > b.gain) {
            best = Some(Optimum { params: x, gain: v });
        }
    }
    best.ok_or_else(|| Error::Optimization("every evaluation failed".into()))
}
