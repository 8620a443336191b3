//! Two-sided Wiener paths, the shift group acting on them, and the
//! multiplicative conjugation factor `z(t) = exp(-eps * w(t))`.
//!
//! A [`WienerPath`] stores samples on a uniform grid containing `t = 0`.
//! Shifts never resample: a [`ShiftedPath`] is a view that evaluates
//! `w(t + s) - w(s)` from the stored array, with `s` held as an integer
//! number of grid steps so that composing shifts is exact.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used when snapping a time onto a grid index.
pub(crate) const SNAP_TOL: f64 = 1e-9;

const FORWARD_STREAM: u64 = 0;
const BACKWARD_STREAM: u64 = 1;
const BRIDGE_STREAM: u64 = 2;

/// Anything that can be read as a scalar noise path.
pub trait NoisePath: Sync {
    /// Path value at time `t`; grid times are exact, other times are linearly interpolated.
    fn value(&self, t: f64) -> Result<f64>;
    /// Closed interval of admissible evaluation times.
    fn window(&self) -> (f64, f64);
    /// Spacing of the underlying sample grid.
    fn dt(&self) -> f64;

    /// Fails unless `[t_lo, t_hi]` lies inside [`NoisePath::window`].
    fn ensure_covers(&self, t_lo: f64, t_hi: f64) -> Result<()> {
        let (min, max) = self.window();
        let slack = SNAP_TOL * self.dt();
        if t_lo < min - slack {
            return Err(Error::OutOfRange { t: t_lo, min, max });
        }
        if t_hi > max + slack {
            return Err(Error::OutOfRange { t: t_hi, min, max });
        }
        Ok(())
    }
}

/// Returns `Some(k)` when `x` is within snapping tolerance of the integer `k`.
pub(crate) fn snap_to_integer(x: f64) -> Option<i64> {
    let r = x.round();
    if (x - r).abs() <= SNAP_TOL * r.abs().max(1.0) {
        Some(r as i64)
    } else {
        None
    }
}

/// Sampled two-sided Wiener path with `w(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct WienerPath {
    seed: u64,
    dt: f64,
    /// Number of halvings applied to the originally sampled grid.
    level: u32,
    origin_index: usize,
    values: Vec<f64>,
}

/// Reproducibility metadata of a path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathMetadata {
    pub seed: u64,
    pub t_min: f64,
    pub t_max: f64,
    pub dt: f64,
    pub refinement_level: u32,
}

fn validate_grid(t_min: f64, t_max: f64, dt: f64) -> Result<(usize, usize)> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::config("dt", format!("must be positive, got {dt}")));
    }
    if !(t_min <= 0.0 && 0.0 <= t_max) {
        return Err(Error::config(
            "window",
            format!("grid [{t_min}, {t_max}] does not contain t = 0"),
        ));
    }
    let back = snap_to_integer(-t_min / dt)
        .ok_or_else(|| Error::config("window", format!("t_min = {t_min} is not a multiple of dt = {dt}")))?;
    let fwd = snap_to_integer(t_max / dt)
        .ok_or_else(|| Error::config("window", format!("t_max = {t_max} is not a multiple of dt = {dt}")))?;
    Ok((back as usize, fwd as usize))
}

/// Samples a two-sided path on `[t_min, t_max]` with spacing `dt`.
///
/// Forward increments come from one ChaCha stream keyed by `seed`, backward
/// increments from an independent stream of the same key, so a longer window
/// extends a shorter one without changing shared samples.
pub fn sample_path(seed: u64, t_min: f64, t_max: f64, dt: f64) -> Result<WienerPath> {
    let (n_back, n_fwd) = validate_grid(t_min, t_max, dt)?;
    let sd = dt.sqrt();
    let mut values = vec![0.0; n_back + n_fwd + 1];

    let mut fwd = ChaCha8Rng::seed_from_u64(seed);
    fwd.set_stream(FORWARD_STREAM);
    let mut acc = 0.0;
    for k in 1..=n_fwd {
        let z: f64 = StandardNormal.sample(&mut fwd);
        acc += sd * z;
        values[n_back + k] = acc;
    }

    let mut bwd = ChaCha8Rng::seed_from_u64(seed);
    bwd.set_stream(BACKWARD_STREAM);
    acc = 0.0;
    for k in 1..=n_back {
        let z: f64 = StandardNormal.sample(&mut bwd);
        acc += sd * z;
        values[n_back - k] = acc;
    }

    Ok(WienerPath {
        seed,
        dt,
        level: 0,
        origin_index: n_back,
        values,
    })
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn bridge_key(seed: u64, level: u32, interval: i64) -> u64 {
    splitmix64(splitmix64(seed ^ splitmix64(level as u64 + 1)) ^ interval as u64)
}

impl WienerPath {
    /// Builds a path from explicit samples starting at `t_min`; the sample at `t = 0` must be zero.
    pub fn from_values(t_min: f64, dt: f64, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::config("values", "empty sample array"));
        }
        let t_max = t_min + (values.len() - 1) as f64 * dt;
        let (n_back, _) = validate_grid(t_min, t_max, dt)?;
        if values[n_back] != 0.0 {
            return Err(Error::config(
                "values",
                format!("sample at t = 0 must be exactly 0, got {}", values[n_back]),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("values", "non-finite sample"));
        }
        Ok(WienerPath {
            seed: 0,
            dt,
            level: 0,
            origin_index: n_back,
            values,
        })
    }

    /// The identically zero path on `[t_min, t_max]`.
    pub fn zero(t_min: f64, t_max: f64, dt: f64) -> Result<Self> {
        let (n_back, n_fwd) = validate_grid(t_min, t_max, dt)?;
        Ok(WienerPath {
            seed: 0,
            dt,
            level: 0,
            origin_index: n_back,
            values: vec![0.0; n_back + n_fwd + 1],
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn t_min(&self) -> f64 {
        -(self.origin_index as f64) * self.dt
    }

    pub fn t_max(&self) -> f64 {
        (self.values.len() - 1 - self.origin_index) as f64 * self.dt
    }

    pub fn origin_index(&self) -> usize {
        self.origin_index
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn metadata(&self) -> PathMetadata {
        PathMetadata {
            seed: self.seed,
            t_min: self.t_min(),
            t_max: self.t_max(),
            dt: self.dt,
            refinement_level: self.level,
        }
    }

    /// Grid times `t_k = t_min + k dt`.
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        let o = self.origin_index as i64;
        (0..self.values.len() as i64).map(move |k| (k - o) as f64 * self.dt)
    }

    /// Value at the grid point `k` steps from the origin.
    pub fn at_step(&self, k: i64) -> Result<f64> {
        let idx = self.origin_index as i64 + k;
        if idx < 0 || idx >= self.values.len() as i64 {
            return Err(Error::OutOfRange {
                t: k as f64 * self.dt,
                min: self.t_min(),
                max: self.t_max(),
            });
        }
        Ok(self.values[idx as usize])
    }

    /// Value at a fractional step position `kf` (steps from the origin).
    fn at_fractional_step(&self, kf: f64) -> Result<f64> {
        if let Some(k) = snap_to_integer(kf) {
            return self.at_step(k);
        }
        let lo = kf.floor();
        let w = kf - lo;
        let a = self.at_step(lo as i64)?;
        let b = self.at_step(lo as i64 + 1)?;
        Ok(a + w * (b - a))
    }

    /// Refines the grid by `factor` (a power of two) with Brownian-bridge midpoints.
    ///
    /// Midpoint draws are keyed by `(seed, level, interval index relative to the origin)`,
    /// so refining twice by 2 equals refining once by 4 and the result does not
    /// depend on the window extent.
    pub fn refine(&self, factor: u32) -> Result<WienerPath> {
        if factor == 0 || !factor.is_power_of_two() {
            return Err(Error::config(
                "factor",
                format!("refinement factor must be a power of two, got {factor}"),
            ));
        }
        let mut path = self.clone();
        let mut f = factor;
        while f > 1 {
            path = path.halve();
            f /= 2;
        }
        Ok(path)
    }

    fn halve(&self) -> WienerPath {
        let level = self.level + 1;
        let half = self.dt / 2.0;
        let sd = (self.dt / 4.0).sqrt();
        let n = self.values.len();
        let mut values = Vec::with_capacity(2 * n - 1);
        for i in 0..n - 1 {
            let a = self.values[i];
            let b = self.values[i + 1];
            let interval = i as i64 - self.origin_index as i64;
            let mut rng = ChaCha8Rng::seed_from_u64(bridge_key(self.seed, level, interval));
            rng.set_stream(BRIDGE_STREAM);
            let z: f64 = StandardNormal.sample(&mut rng);
            values.push(a);
            values.push(0.5 * (a + b) + sd * z);
        }
        values.push(self.values[n - 1]);
        WienerPath {
            seed: self.seed,
            dt: half,
            level,
            origin_index: 2 * self.origin_index,
            values,
        }
    }

    /// Returns a path on the grid with spacing `dt`, refining when `dt` is finer.
    ///
    /// Coarser `dt` values that are integer multiples of the stored spacing reuse
    /// the stored samples directly.
    pub fn on_grid(&self, dt: f64) -> Result<WienerPath> {
        let ratio = self.dt / dt;
        if let Some(r) = snap_to_integer(ratio) {
            if r >= 1 {
                return self.refine(r as u32);
            }
        }
        if snap_to_integer(dt / self.dt).is_some() {
            return Ok(self.clone());
        }
        Err(Error::config(
            "dt",
            format!("dt = {dt} is incompatible with the path spacing {}", self.dt),
        ))
    }

    /// Identity view `shift(w, 0)`.
    pub fn view(&self) -> ShiftedPath<'_> {
        ShiftedPath { base: self, offset: 0 }
    }

    /// `theta_s w`, evaluated as `t -> w(t + s) - w(s)`.
    pub fn shift(&self, s: f64) -> Result<ShiftedPath<'_>> {
        self.view().shift(s)
    }
}

impl NoisePath for WienerPath {
    fn value(&self, t: f64) -> Result<f64> {
        self.at_fractional_step(t / self.dt).map_err(|_| Error::OutOfRange {
            t,
            min: self.t_min(),
            max: self.t_max(),
        })
    }

    fn window(&self) -> (f64, f64) {
        (self.t_min(), self.t_max())
    }

    fn dt(&self) -> f64 {
        self.dt
    }
}

/// `theta_s w` as a view over a stored path; `s` is an integer number of grid steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftedPath<'a> {
    base: &'a WienerPath,
    offset: i64,
}

impl<'a> ShiftedPath<'a> {
    pub fn base(&self) -> &'a WienerPath {
        self.base
    }

    /// Accumulated shift in time units.
    pub fn shift_time(&self) -> f64 {
        self.offset as f64 * self.base.dt
    }

    /// Accumulated shift in grid steps.
    pub fn shift_steps(&self) -> i64 {
        self.offset
    }

    /// Composes shifts: `theta_s (theta_a w) = theta_{a+s} w`.
    pub fn shift(&self, s: f64) -> Result<ShiftedPath<'a>> {
        let k = snap_to_integer(s / self.base.dt).ok_or_else(|| {
            Error::config(
                "shift",
                format!("shift {s} is not a multiple of the path spacing {}", self.base.dt),
            )
        })?;
        Ok(ShiftedPath {
            base: self.base,
            offset: self.offset + k,
        })
    }
}

impl NoisePath for ShiftedPath<'_> {
    fn value(&self, t: f64) -> Result<f64> {
        let out_of_range = |_| {
            let (min, max) = self.window();
            Error::OutOfRange { t, min, max }
        };
        let kf = t / self.base.dt;
        let shifted = match snap_to_integer(kf) {
            Some(k) => self.base.at_step(k + self.offset),
            None => self.base.at_fractional_step(kf + self.offset as f64),
        }
        .map_err(out_of_range)?;
        let anchor = self.base.at_step(self.offset).map_err(out_of_range)?;
        Ok(shifted - anchor)
    }

    fn window(&self) -> (f64, f64) {
        let s = self.shift_time();
        (self.base.t_min() - s, self.base.t_max() - s)
    }

    fn dt(&self) -> f64 {
        self.base.dt
    }
}

/// `z_eps(t) = exp(-eps * w(t))`.
pub fn z_factor(path: &(impl NoisePath + ?Sized), epsilon: f64, t: f64) -> Result<f64> {
    Ok((-epsilon * path.value(t)?).exp())
}

/// One row of [`sublinearity_report`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SublinearityRow {
    pub threshold: f64,
    /// `sup |w(t)/t|` over grid times with `|t| >= threshold`; `None` when no grid time qualifies.
    pub supremum: Option<f64>,
}

/// Tabulates `sup_{|t| >= T} |w(t)/t|` over the stored grid for each `T` in `thresholds`.
pub fn sublinearity_report(path: &WienerPath, thresholds: &[f64]) -> Result<Vec<SublinearityRow>> {
    if path.values.len() < 2 {
        return Err(Error::Domain("degenerate path window".into()));
    }
    let samples: Vec<(f64, f64)> = path
        .times()
        .zip(path.values.iter().copied())
        .filter(|(t, _)| *t != 0.0)
        .collect();
    Ok(thresholds
        .iter()
        .map(|&threshold| {
            let supremum = samples
                .iter()
                .filter(|(t, _)| t.abs() >= threshold - SNAP_TOL * path.dt)
                .map(|(t, w)| (w / t).abs())
                .fold(None, |acc: Option<f64>, r| Some(acc.map_or(r, |a| a.max(r))));
            SublinearityRow { threshold, supremum }
        })
        .collect())
}

/// `(E, F)`: min and max of `z_eps(s)` over grid samples `s in [-1, 0]`.
pub fn z_window_bounds(path: &(impl NoisePath + ?Sized), epsilon: f64) -> Result<(f64, f64)> {
    path.ensure_covers(-1.0, 0.0)?;
    let dt = path.dt();
    let n = snap_to_integer(1.0 / dt).unwrap_or_else(|| (1.0 / dt).floor() as i64);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for k in 0..=n {
        let z = z_factor(path, epsilon, -(k as f64) * dt)?;
        lo = lo.min(z);
        hi = hi.max(z);
    }
    Ok((lo, hi))
}
