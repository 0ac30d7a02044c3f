//! Sampled signals on a uniform time grid, control-point interpolation, and
//! the windowed statistics that manual fitness functions are built from.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used when checking that a horizon is a whole number of steps.
const GRID_TOL: f64 = 1e-9;

/// Uniform time grid over `[0, end]` with spacing `step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct TimeGrid {
    end: f64,
    step: f64,
    samples: usize,
}

#[derive(Serialize, Deserialize)]
struct GridRepr {
    end: f64,
    step: f64,
}

impl TryFrom<GridRepr> for TimeGrid {
    type Error = Error;
    fn try_from(r: GridRepr) -> Result<Self> {
        TimeGrid::new(r.end, r.step)
    }
}

impl From<TimeGrid> for GridRepr {
    fn from(g: TimeGrid) -> Self {
        GridRepr { end: g.end, step: g.step }
    }
}

impl TimeGrid {
    pub fn new(end: f64, step: f64) -> Result<Self> {
        if !(end.is_finite() && step.is_finite()) || end <= 0.0 || step <= 0.0 {
            return Err(Error::invalid(format!("time grid needs end > 0 and step > 0, got end={end}, step={step}")));
        }
        let ratio = end / step;
        let rounded = ratio.round();
        if (ratio - rounded).abs() > GRID_TOL * ratio.max(1.0) || rounded < 1.0 {
            return Err(Error::invalid(format!("horizon {end} is not a whole number of steps of {step}")));
        }
        Ok(Self { end, step, samples: rounded as usize + 1 })
    }

    pub fn start(&self) -> f64 {
        0.0
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Number of samples, endpoints included.
    pub fn len(&self) -> usize {
        self.samples
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Time of sample `i`. The last sample is pinned to `end` exactly.
    pub fn time(&self, i: usize) -> f64 {
        if i + 1 == self.samples {
            self.end
        } else {
            i as f64 * self.step
        }
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.samples).map(move |i| self.time(i))
    }

    /// Indices of the samples with `a <= t <= b`, tolerating `GRID_TOL` steps of slack.
    pub fn window_indices(&self, a: f64, b: f64) -> std::ops::RangeInclusive<usize> {
        let lo = ((a / self.step) - GRID_TOL).ceil().max(0.0) as usize;
        let hi = ((b / self.step) + GRID_TOL).floor();
        let hi = if hi < 0.0 { 0 } else { (hi as usize).min(self.samples - 1) };
        if b < 0.0 || lo > hi {
            // empty range
            #[allow(clippy::reversed_empty_ranges)]
            return 1..=0;
        }
        lo..=hi
    }

    /// Whether two grids describe the same samples.
    pub fn same_as(&self, other: &TimeGrid) -> bool {
        self.samples == other.samples
            && (self.end - other.end).abs() <= GRID_TOL * self.end
            && (self.step - other.step).abs() <= GRID_TOL * self.step
    }
}

/// Real-valued samples, one per grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl Signal {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(format!(
                "signal has {} values but the grid has {} samples",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite signal value at sample {i}")));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: TimeGrid, value: f64) -> Result<Self> {
        Self::new(grid, vec![value; grid.len()])
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Control points `(t_j, v_j)` from which an input signal is interpolated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlPoints {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl ControlPoints {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::invalid("control times and values differ in length"));
        }
        if times.is_empty() {
            return Err(Error::invalid("at least one control point is required"));
        }
        if times[0] != 0.0 {
            return Err(Error::invalid("first control time must be 0"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("control times must be strictly increasing"));
        }
        if values.iter().chain(times.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("control points must be finite"));
        }
        Ok(Self { times, values })
    }

    /// Evenly spaced control points spanning `grid`.
    pub fn uniform(grid: &TimeGrid, values: Vec<f64>) -> Result<Self> {
        let times = uniform_control_times(grid, values.len())?;
        Self::new(times, values)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterpolationKind {
    Pchip,
    Linear,
    PiecewiseConstant,
    Constant,
}

impl InterpolationKind {
    pub fn check_arity(self, n: usize) -> Result<()> {
        let ok = match self {
            Self::Constant => n == 1,
            Self::Pchip | Self::Linear => n >= 2,
            Self::PiecewiseConstant => n >= 1,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("{self:?} interpolation cannot use {n} control points")))
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Pchip => "pchip",
            Self::Linear => "linear",
            Self::PiecewiseConstant => "pconst",
            Self::Constant => "const",
        }
    }
}

impl std::str::FromStr for InterpolationKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pchip" => Ok(Self::Pchip),
            "linear" => Ok(Self::Linear),
            "pconst" | "piecewise_constant" | "piecewiseconstant" => Ok(Self::PiecewiseConstant),
            "const" | "constant" => Ok(Self::Constant),
            other => Err(Error::invalid(format!("unknown interpolation kind '{other}'"))),
        }
    }
}

/// `n` evenly spaced instants from 0 to the end of the grid (just `[0]` for `n = 1`).
pub fn uniform_control_times(grid: &TimeGrid, n: usize) -> Result<Vec<f64>> {
    match n {
        0 => Err(Error::invalid("control point count must be at least 1")),
        1 => Ok(vec![0.0]),
        _ => {
            let last = (n - 1) as f64;
            Ok((0..n).map(|j| if j == n - 1 { grid.end() } else { grid.end() * (j as f64 / last) }).collect())
        }
    }
}

/// Samples the curve through `cp` on every point of `grid`.
pub fn interpolate(cp: &ControlPoints, kind: InterpolationKind, grid: &TimeGrid) -> Result<Signal> {
    kind.check_arity(cp.len())?;
    let times = cp.times();
    let last = *times.last().expect("non-empty");
    if kind != InterpolationKind::Constant && (last - grid.end()).abs() > GRID_TOL * grid.end().max(1.0) {
        return Err(Error::invalid(format!("control points end at {last} but the grid ends at {}", grid.end())));
    }
    let values = cp.values();
    let out: Vec<f64> = match kind {
        InterpolationKind::Constant => vec![values[0]; grid.len()],
        InterpolationKind::PiecewiseConstant => grid
            .times()
            .map(|t| {
                // last j with t_j <= t
                let j = times.partition_point(|&tj| tj <= t).saturating_sub(1);
                values[j]
            })
            .collect(),
        InterpolationKind::Linear => grid
            .times()
            .map(|t| {
                let j = segment(times, t);
                let h = times[j + 1] - times[j];
                let s = (t - times[j]) / h;
                // convex form: exact at both control points
                values[j] * (1.0 - s) + values[j + 1] * s
            })
            .collect(),
        InterpolationKind::Pchip => {
            let slopes = pchip_slopes(times, values);
            grid.times()
                .map(|t| {
                    let j = segment(times, t);
                    hermite(times[j], times[j + 1], values[j], values[j + 1], slopes[j], slopes[j + 1], t)
                })
                .collect()
        }
    };
    Signal::new(*grid, out)
}

/// Index `j` of the segment `[t_j, t_{j+1}]` holding `t`; clamps outside the span.
fn segment(times: &[f64], t: f64) -> usize {
    let n = times.len();
    times.partition_point(|&tj| tj <= t).saturating_sub(1).min(n - 2)
}

fn hermite(t0: f64, t1: f64, v0: f64, v1: f64, m0: f64, m1: f64, t: f64) -> f64 {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    h00 * v0 + h10 * h * m0 + h01 * v1 + h11 * h * m1
}

/// Fritsch–Carlson derivative estimates at the control points.
///
/// Interior slopes are the weighted harmonic mean of the adjacent secants (zero at
/// local extrema); end slopes use the one-sided three-point formula, clamped so the
/// curve stays monotone next to the boundary.
pub(crate) fn pchip_slopes(t: &[f64], v: &[f64]) -> Vec<f64> {
    let n = t.len();
    let h: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (v[k + 1] - v[k]) / h[k]).collect();
    if n == 2 {
        return vec![delta[0], delta[0]];
    }
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        if delta[k - 1] * delta[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
    }
    d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

fn end_slope(h0: f64, h1: f64, del0: f64, del1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if d.signum() != del0.signum() || d == 0.0 || del0 == 0.0 {
        0.0
    } else if del0.signum() != del1.signum() && d.abs() > 3.0 * del0.abs() {
        3.0 * del0
    } else {
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stat {
    Min,
    Max,
    Mean,
    PeakToPeak,
}

impl Stat {
    pub fn name(self) -> &'static str {
        match self {
            Stat::Min => "min",
            Stat::Max => "max",
            Stat::Mean => "mean",
            Stat::PeakToPeak => "p2p",
        }
    }
}

/// Statistic over the samples with `a <= t <= b`.
pub fn window_stat(s: &Signal, stat: Stat, window: (f64, f64)) -> Result<f64> {
    let (a, b) = window;
    if !(a >= 0.0 && a < b && b <= s.grid().end() * (1.0 + GRID_TOL)) {
        return Err(Error::invalid(format!("window [{a}, {b}] must satisfy 0 <= a < b <= {}", s.grid().end())));
    }
    let range = s.grid().window_indices(a, b);
    if range.is_empty() {
        return Err(Error::invalid(format!("window [{a}, {b}] holds no samples")));
    }
    let xs = &s.values()[range];
    let min = || xs.iter().copied().fold(f64::INFINITY, f64::min);
    let max = || xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(match stat {
        Stat::Min => min(),
        Stat::Max => max(),
        Stat::Mean => xs.iter().sum::<f64>() / xs.len() as f64,
        Stat::PeakToPeak => max() - min(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlopeDirection {
    Positive,
    Negative,
}

/// Steepest rise (or fall, as a magnitude) between consecutive control points in the window.
///
/// Returns 0 when no segment moves in the requested direction.
pub fn steepest_slope(cp: &ControlPoints, direction: SlopeDirection, window: (f64, f64)) -> Result<f64> {
    let (a, b) = window;
    let inside: Vec<(f64, f64)> = cp
        .times()
        .iter()
        .zip(cp.values())
        .filter(|(&t, _)| t >= a - GRID_TOL && t <= b + GRID_TOL)
        .map(|(&t, &v)| (t, v))
        .collect();
    if inside.len() < 2 {
        return Err(Error::invalid(format!("window [{a}, {b}] holds fewer than 2 control points")));
    }
    let best = inside
        .windows(2)
        .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
        .map(|slope| match direction {
            SlopeDirection::Positive => slope,
            SlopeDirection::Negative => -slope,
        })
        .fold(0.0, f64::max);
    Ok(best)
}

/// Maps `value` linearly from `[lo, hi]` onto `[0, 1]`, clamping outside the range.
pub fn scale(value: f64, range: (f64, f64)) -> Result<f64> {
    let (lo, hi) = range;
    if !(lo < hi) {
        return Err(Error::invalid(format!("scale range [{lo}, {hi}] needs lo < hi")));
    }
    Ok(((value - lo) / (hi - lo)).clamp(0.0, 1.0))
}
