//! One-dimensional profiles: right-continuous nonincreasing step functions
//! on `[0, total]` (the home of decreasing rearrangements, measure
//! coordinates) and radial node profiles on `[0, R]`.
//!
//! Profiles built from grid functions keep one step per cell — equal
//! adjacent values are *not* merged — so the multiset of `(value, width)`
//! pairs is exactly the multiset of cells, and the exact identities
//! (equimeasurability, norm preservation) hold bitwise rather than up to
//! re-summation error.

use std::io::{BufRead, Write as IoWrite};

use crate::error::Error;
use crate::fmt::fmt_g;
use crate::tol;

/// Nonincreasing right-continuous step function on `[0, total]`.
///
/// `breaks` has one more entry than `values`; step `k` covers
/// `[breaks[k], breaks[k+1])` (the last step is closed on the right).
#[derive(Debug, Clone, PartialEq)]
pub struct StepProfile {
    breaks: Vec<f64>,
    values: Vec<f64>,
    /// prefix[k] = ∫ over the first k full steps, accumulated left to
    /// right (so concentration lookups reproduce the sequential sum
    /// bitwise in O(log K)).
    prefix: Vec<f64>,
}

impl StepProfile {
    pub fn new(breaks: Vec<f64>, values: Vec<f64>) -> Result<StepProfile, Error> {
        if breaks.len() != values.len() + 1 || values.is_empty() {
            return Err(Error::InvalidProfile("need K+1 breakpoints for K steps"));
        }
        if breaks[0] != 0.0 {
            return Err(Error::InvalidProfile("profiles start at measure 0"));
        }
        if breaks.iter().any(|b| !b.is_finite()) || breaks.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidProfile("breakpoints must increase strictly"));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidProfile(
                "values must be nonnegative and finite",
            ));
        }
        if values.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidProfile("values must be nonincreasing"));
        }
        let mut prefix = Vec::with_capacity(values.len() + 1);
        let mut acc = 0.0f64;
        prefix.push(0.0);
        for (k, v) in values.iter().enumerate() {
            acc += v * (breaks[k + 1] - breaks[k]);
            prefix.push(acc);
        }
        Ok(StepProfile {
            breaks,
            values,
            prefix,
        })
    }

    /// Profile with one step of width `cell_measure` per value.
    /// `values` must already be sorted in descending order.
    pub fn from_cell_values(values: Vec<f64>, cell_measure: f64) -> Result<StepProfile, Error> {
        if !(cell_measure.is_finite() && cell_measure > 0.0) {
            return Err(Error::InvalidProfile("cell measure must be positive"));
        }
        let breaks: Vec<f64> = (0..=values.len())
            .map(|k| k as f64 * cell_measure)
            .collect();
        StepProfile::new(breaks, values)
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn steps(&self) -> usize {
        self.values.len()
    }

    pub fn total(&self) -> f64 {
        *self.breaks.last().unwrap()
    }

    pub fn max_value(&self) -> f64 {
        self.values[0]
    }

    pub fn min_value(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// Index of the step containing `s` (clamped into `[0, total]`).
    fn step_of(&self, s: f64) -> usize {
        if s <= 0.0 {
            return 0;
        }
        if s >= self.total() {
            return self.values.len() - 1;
        }
        // partition_point: first k with breaks[k+1] > s.
        self.breaks[1..].partition_point(|&b| b <= s)
    }

    /// Checked evaluation at measure `s`.
    pub fn value_at(&self, s: f64) -> Result<f64, Error> {
        if !(s >= 0.0 && s <= self.total()) {
            return Err(Error::MeasureOutOfRange);
        }
        Ok(self.eval_clamped(s))
    }

    /// Right-continuous evaluation, clamping `s` into `[0, total]`.
    pub fn eval_clamped(&self, s: f64) -> f64 {
        self.values[self.step_of(s)]
    }

    /// Concentration `∫₀ˢ v`: exact finite sum of step areas.
    pub fn concentration(&self, s: f64) -> Result<f64, Error> {
        if !(s >= 0.0 && s <= self.total()) {
            return Err(Error::MeasureOutOfRange);
        }
        Ok(self.concentration_clamped(s))
    }

    /// Concentration with `s` clamped into `[0, total]`.
    pub fn concentration_clamped(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, self.total());
        // Full steps have upper break ≤ s; at most one partial step follows.
        let full = self.breaks[1..].partition_point(|&b| b <= s);
        let mut acc = self.prefix[full];
        if full < self.values.len() && self.breaks[full] < s {
            acc += self.values[full] * (s - self.breaks[full]);
        }
        acc
    }

    /// Total width where the profile exceeds `t`. Because values are
    /// nonincreasing this is a single stored breakpoint — the same
    /// arithmetic as the grid-side distribution function, hence exact.
    pub fn distribution(&self, t: f64) -> Result<f64, Error> {
        if !(t >= 0.0) {
            return Err(Error::NegativeThreshold);
        }
        // First step with value <= t; everything before it exceeds t.
        let k = self.values.partition_point(|&v| v > t);
        Ok(self.breaks[k])
    }

    /// Symmetric difference quotient over a measure window of width `w`
    /// (clamped at the ends). Nonpositive by monotonicity; 0 on plateaus.
    pub fn window_quotient(&self, s: f64, w: f64) -> f64 {
        let lo = (s - 0.5 * w).max(0.0);
        let hi = (s + 0.5 * w).min(self.total());
        if hi <= lo {
            return 0.0;
        }
        (self.eval_clamped(hi) - self.eval_clamped(lo)) / (hi - lo)
    }

    /// Default derivative window: `max(4·cell, total·1e-3)`.
    pub fn default_window(&self, cell_measure: f64) -> f64 {
        (tol::DERIV_WINDOW_CELLS * cell_measure).max(self.total() * tol::DERIV_WINDOW_REL)
    }

    /// Difference quotient with band-averaged endpoints: the slope between
    /// the mean values over `[s−w, s]` and `[s, s+w]` (exact step-area
    /// means), read at the band centers. Averaging suppresses the value
    /// quantization of lattice-tie classes that makes raw two-point
    /// quotients noisy; squaring such a quotient would otherwise inflate
    /// quadratic functionals systematically.
    pub fn band_quotient(&self, s: f64, w: f64) -> f64 {
        let t = self.total();
        let (a0, a1) = ((s - w).max(0.0), s.clamp(0.0, t));
        let (b0, b1) = (s.clamp(0.0, t), (s + w).min(t));
        if a1 <= a0 || b1 <= b0 {
            return 0.0;
        }
        let m_lo = (self.concentration_clamped(a1) - self.concentration_clamped(a0)) / (a1 - a0);
        let m_hi = (self.concentration_clamped(b1) - self.concentration_clamped(b0)) / (b1 - b0);
        let c_lo = 0.5 * (a0 + a1);
        let c_hi = 0.5 * (b0 + b1);
        if c_hi <= c_lo {
            return 0.0;
        }
        (m_hi - m_lo) / (c_hi - c_lo)
    }

    /// Exact `∫ self·other` over the common refinement. Totals must agree
    /// to relative [`tol::MEASURE_REL`].
    pub fn integral_against(&self, other: &StepProfile) -> Result<f64, Error> {
        let (ta, tb) = (self.total(), other.total());
        if (ta - tb).abs() > tol::MEASURE_REL * ta.max(tb) {
            return Err(Error::IncompatibleProfile);
        }
        let end = ta.min(tb);
        let mut acc = 0.0;
        let (mut i, mut j) = (0usize, 0usize);
        let mut cur = 0.0f64;
        while cur < end && i < self.values.len() && j < other.values.len() {
            // next > cur always: breakpoints increase strictly and the
            // pointer that reached `cur` was advanced past it.
            let next = self.breaks[i + 1].min(other.breaks[j + 1]).min(end);
            acc += self.values[i] * other.values[j] * (next - cur);
            if self.breaks[i + 1] == next {
                i += 1;
            }
            if other.breaks[j + 1] == next {
                j += 1;
            }
            cur = next;
        }
        Ok(acc)
    }

    /// `∫ value^p` as an exact sum of step contributions.
    pub fn integral_power(&self, p: f64) -> f64 {
        let mut acc = 0.0;
        for k in 0..self.values.len() {
            let w = self.breaks[k + 1] - self.breaks[k];
            acc += self.values[k].powf(p) * w;
        }
        acc
    }

    /// New profile with `f` applied to each value (must stay monotone).
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Result<StepProfile, Error> {
        StepProfile::new(
            self.breaks.clone(),
            self.values.iter().map(|&v| f(v)).collect(),
        )
    }

    /// Write as CSV: header `s,value`; row k holds step k's right endpoint
    /// and value (steps start at measure 0).
    pub fn write_csv(&self, out: &mut dyn IoWrite) -> Result<(), Error> {
        writeln!(out, "s,value")?;
        for k in 0..self.values.len() {
            writeln!(
                out,
                "{},{}",
                fmt_g(self.breaks[k + 1]),
                fmt_g(self.values[k])
            )?;
        }
        Ok(())
    }

    pub fn read_csv(input: &mut dyn BufRead) -> Result<StepProfile, Error> {
        let mut breaks = vec![0.0f64];
        let mut values = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            let lineno = i + 1;
            if lineno == 1 {
                if line.trim() != "s,value" {
                    return Err(Error::Parse {
                        line: 1,
                        msg: "expected header `s,value`".into(),
                    });
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let mut cols = line.split(',');
            let (s, v) = match (cols.next(), cols.next(), cols.next()) {
                (Some(s), Some(v), None) => (s, v),
                _ => {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: "rows are `s,value`".into(),
                    })
                }
            };
            let s: f64 = s.trim().parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: "bad measure".into(),
            })?;
            let v: f64 = v.trim().parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: "bad value".into(),
            })?;
            breaks.push(s);
            values.push(v);
        }
        StepProfile::new(breaks, values)
    }
}

/// Values on uniformly spaced radii `0 = r_0 < … < r_{K-1} = R` of a ball
/// in dimension `n` (1 or 2). Not necessarily monotone.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    n: usize,
    radii: Vec<f64>,
    values: Vec<f64>,
}

impl RadialProfile {
    pub fn new(n: usize, radii: Vec<f64>, values: Vec<f64>) -> Result<RadialProfile, Error> {
        if n != 1 && n != 2 {
            return Err(Error::BadParameter("ball dimension must be 1 or 2"));
        }
        if radii.len() != values.len() || radii.len() < 2 {
            return Err(Error::InvalidProfile(
                "need matching radii/values, at least two nodes",
            ));
        }
        if radii[0] != 0.0 {
            return Err(Error::InvalidProfile("radial profiles start at r = 0"));
        }
        let dr = radii[1] - radii[0];
        if !(dr.is_finite() && dr > 0.0) {
            return Err(Error::InvalidProfile("radii must increase"));
        }
        for (j, w) in radii.windows(2).enumerate() {
            let step = w[1] - w[0];
            if (step - dr).abs() > 1e-9 * dr.max(1e-300) {
                let _ = j;
                return Err(Error::InvalidProfile("radii must be uniformly spaced"));
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidProfile("values must be finite"));
        }
        Ok(RadialProfile { n, radii, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn outer_radius(&self) -> f64 {
        *self.radii.last().unwrap()
    }

    pub fn dr(&self) -> f64 {
        self.radii[1] - self.radii[0]
    }

    /// Linear interpolation, clamped to the end values outside `[0, R]`.
    pub fn eval_clamped(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return self.values[0];
        }
        let last = self.radii.len() - 1;
        if r >= self.radii[last] {
            return self.values[last];
        }
        let t = r / self.dr();
        let j = (t.floor() as usize).min(last - 1);
        let frac = t - j as f64;
        self.values[j] * (1.0 - frac) + self.values[j + 1] * frac
    }

    /// Write as CSV with header `r,value`.
    pub fn write_csv(&self, out: &mut dyn IoWrite) -> Result<(), Error> {
        writeln!(out, "r,value")?;
        for (r, v) in self.radii.iter().zip(&self.values) {
            writeln!(out, "{},{}", fmt_g(*r), fmt_g(*v))?;
        }
        Ok(())
    }

    pub fn read_csv(input: &mut dyn BufRead, n: usize) -> Result<RadialProfile, Error> {
        let mut radii = Vec::new();
        let mut values = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            let lineno = i + 1;
            if lineno == 1 {
                if line.trim() != "r,value" {
                    return Err(Error::Parse {
                        line: 1,
                        msg: "expected header `r,value`".into(),
                    });
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let mut cols = line.split(',');
            let (r, v) = match (cols.next(), cols.next(), cols.next()) {
                (Some(r), Some(v), None) => (r, v),
                _ => {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: "rows are `r,value`".into(),
                    })
                }
            };
            radii.push(r.trim().parse::<f64>().map_err(|_| Error::Parse {
                line: lineno,
                msg: "bad radius".into(),
            })?);
            values.push(v.trim().parse::<f64>().map_err(|_| Error::Parse {
                line: lineno,
                msg: "bad value".into(),
            })?);
        }
        RadialProfile::new(n, radii, values)
    }
}
