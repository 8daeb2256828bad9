//! Local-time fields of a sampled path.
//!
//! The sampled path is read as a piecewise-linear function of time, so the
//! occupation measure is known exactly: a segment from `a` to `b` of duration
//! Δs spends Δs·|I ∩ [a, b]|/|b − a| in any interval `I`. Two views of that
//! measure are provided: bin averages on a [`SpatialGrid`] and the exact
//! piecewise-constant [`BreakpointDensity`].

use std::collections::BTreeSet;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmt17;
use crate::path::BrownianPath;

/// Increments below this magnitude are widened to it in the breakpoint view.
pub const MIN_INCREMENT: f64 = 1e-300;

/// Uniform spatial bins whose edges sit on the lattice `k·Δx`, `k ∈ ℤ`.
///
/// Anchoring on the lattice makes the grid of a negated path the exact mirror
/// image of the original grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    dx: f64,
    first_cell: i64,
    n_bins: usize,
}

impl SpatialGrid {
    /// Bins `[k·dx, (k+1)·dx)` for `k` in `first_cell .. first_cell + n_bins`.
    pub fn new(dx: f64, first_cell: i64, n_bins: usize) -> Result<Self> {
        if !(dx > 0.0 && dx.is_finite()) {
            return Err(Error::usage(format!("bin width must be positive, got {dx}")));
        }
        if n_bins == 0 {
            return Err(Error::usage("spatial grid needs at least one bin"));
        }
        Ok(SpatialGrid {
            dx,
            first_cell,
            n_bins,
        })
    }

    /// Smallest lattice grid containing `[lo, hi]`.
    pub fn spanning(lo: f64, hi: f64, dx: f64) -> Result<Self> {
        if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::usage(format!("invalid spatial range [{lo}, {hi}]")));
        }
        if !(dx > 0.0) {
            return Err(Error::usage(format!("bin width must be positive, got {dx}")));
        }
        let first = (lo / dx).floor() as i64;
        let last = ((hi / dx).ceil() as i64).max(first + 1);
        Self::new(dx, first, (last - first) as usize)
    }

    /// Grid covering the path range with a margin of `h_max + 4·dx` on each side.
    pub fn covering(path: &BrownianPath, h_max: f64, dx: f64) -> Result<Self> {
        let (lo, hi) = path.min_max();
        let margin = h_max.max(0.0) + 4.0 * dx;
        Self::spanning(lo - margin, hi + margin, dx)
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn first_cell(&self) -> i64 {
        self.first_cell
    }

    pub fn x_min(&self) -> f64 {
        self.first_cell as f64 * self.dx
    }

    pub fn x_max(&self) -> f64 {
        (self.first_cell + self.n_bins as i64) as f64 * self.dx
    }

    pub fn left_edge(&self, j: usize) -> f64 {
        (self.first_cell + j as i64) as f64 * self.dx
    }

    /// Grid reflected through the origin.
    pub fn mirrored(&self) -> SpatialGrid {
        SpatialGrid {
            dx: self.dx,
            first_cell: -(self.first_cell + self.n_bins as i64),
            n_bins: self.n_bins,
        }
    }

    /// Bin containing `x`, if any.
    pub fn bin_of(&self, x: f64) -> Option<usize> {
        let c = (x / self.dx).floor() as i64 - self.first_cell;
        (0..self.n_bins as i64).contains(&c).then_some(c as usize)
    }

    /// `h` expressed as a whole number of bins.
    pub fn lattice_shift(&self, h: f64) -> Result<usize> {
        let k = (h / self.dx).round();
        if !(h > 0.0) || k < 1.0 || (k * self.dx - h).abs() > 1e-9 * h {
            return Err(Error::usage(format!(
                "h = {h} is not a positive multiple of the bin width {}",
                self.dx
            )));
        }
        Ok(k as usize)
    }

    fn check_covers(&self, path: &BrownianPath) -> Result<()> {
        let (lo, hi) = path.min_max();
        if lo < self.x_min() {
            return Err(Error::Range(format!(
                "path minimum {lo} lies below the grid start {}",
                self.x_min()
            )));
        }
        if hi >= self.x_max() {
            return Err(Error::Range(format!(
                "path maximum {hi} lies at or above the grid end {}",
                self.x_max()
            )));
        }
        Ok(())
    }
}

/// Bin-averaged local time at time `time`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalTimeField {
    pub grid: SpatialGrid,
    pub values: Vec<f64>,
    pub time: f64,
}

impl LocalTimeField {
    pub fn zero(grid: SpatialGrid) -> Self {
        LocalTimeField {
            grid,
            values: vec![0.0; grid.n_bins],
            time: 0.0,
        }
    }

    /// Value of bin `j`, zero outside the grid.
    #[inline]
    pub fn at(&self, j: i64) -> f64 {
        if j >= 0 && (j as usize) < self.values.len() {
            self.values[j as usize]
        } else {
            0.0
        }
    }

    /// Bin-average read at the bin containing `x` (zero off the grid).
    pub fn value_at(&self, x: f64) -> f64 {
        self.grid.bin_of(x).map_or(0.0, |j| self.values[j])
    }

    /// Σ value·Δx, the total occupation time represented by the field.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.dx
    }

    /// ∫ f(x) L(x) dx with `f` integrated exactly over each bin by `bin_integral`.
    pub fn integrate_against<F: Fn(f64, f64) -> f64>(&self, bin_integral: F) -> f64 {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(j, v)| v * bin_integral(self.grid.left_edge(j), self.grid.left_edge(j + 1)))
            .sum()
    }

    /// CSV dump with columns `bin_left_edge,value`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "bin_left_edge,value")?;
        for (j, v) in self.values.iter().enumerate() {
            writeln!(out, "{},{}", fmt17(self.grid.left_edge(j)), fmt17(*v))?;
        }
        Ok(())
    }
}

/// Incremental occupation-time accumulator on a fixed grid.
#[derive(Debug, Clone)]
struct Occupation {
    grid: SpatialGrid,
    occ: Vec<f64>,
    elapsed: f64,
}

impl Occupation {
    fn new(grid: SpatialGrid) -> Self {
        Occupation {
            grid,
            occ: vec![0.0; grid.n_bins],
            elapsed: 0.0,
        }
    }

    /// Adds the linear segment from `a` to `b` lasting `ds`.
    #[inline]
    fn add_segment(&mut self, a: f64, b: f64, ds: f64) {
        let inv = 1.0 / self.grid.dx;
        let (ya, yb) = (a * inv, b * inv);
        let (lo, hi) = if ya <= yb { (ya, yb) } else { (yb, ya) };
        let c0 = lo.floor();
        let base = c0 as i64 - self.grid.first_cell;
        let len = hi - lo;
        if len == 0.0 {
            self.occ[base as usize] += ds;
        } else {
            let rate = ds / len;
            let mut c = c0;
            let mut j = base as usize;
            loop {
                let overlap = hi.min(c + 1.0) - lo.max(c);
                self.occ[j] += rate * overlap;
                c += 1.0;
                j += 1;
                if c >= hi {
                    break;
                }
            }
        }
        self.elapsed += ds;
    }

    fn snapshot(&self, time: f64) -> LocalTimeField {
        let inv = 1.0 / self.grid.dx;
        LocalTimeField {
            grid: self.grid,
            values: self.occ.iter().map(|o| o * inv).collect(),
            time,
        }
    }
}

/// Bin averages of the occupation density of the piecewise-linear path.
pub fn binned_field(path: &BrownianPath, grid: &SpatialGrid) -> Result<LocalTimeField> {
    grid.check_covers(path)?;
    let ds = path.grid().step();
    let mut acc = Occupation::new(*grid);
    for w in path.values().windows(2) {
        acc.add_segment(w[0], w[1], ds);
    }
    Ok(acc.snapshot(path.horizon()))
}

/// Exact occupation density of the piecewise-linear path: constant between
/// consecutive breakpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct BreakpointDensity {
    /// Sorted, distinct breakpoints.
    pub breakpoints: Vec<f64>,
    /// `density[i]` holds on `[breakpoints[i], breakpoints[i + 1])`.
    pub density: Vec<f64>,
    /// Number of segments whose increment was widened to [`MIN_INCREMENT`].
    pub clamped: usize,
    pub time: f64,
}

impl BreakpointDensity {
    /// ∫ density dx.
    pub fn total_mass(&self) -> f64 {
        self.density
            .iter()
            .zip(self.breakpoints.windows(2))
            .map(|(d, w)| d * (w[1] - w[0]))
            .sum()
    }

    /// Density at `x` (right-continuous, zero outside the breakpoints).
    pub fn value_at(&self, x: f64) -> f64 {
        match self.breakpoints.partition_point(|b| *b <= x) {
            0 => 0.0,
            i if i >= self.breakpoints.len() => 0.0,
            i => self.density[i - 1],
        }
    }

    /// Averages of the density over the bins of `grid`.
    pub fn bin_averages(&self, grid: &SpatialGrid) -> Vec<f64> {
        let mut occ = vec![0.0; grid.n_bins()];
        let inv = 1.0 / grid.dx();
        for (d, w) in self.density.iter().zip(self.breakpoints.windows(2)) {
            if *d == 0.0 {
                continue;
            }
            let (lo, hi) = (w[0] * inv, w[1] * inv);
            let mut c = lo.floor();
            while c < hi {
                let j = c as i64 - grid.first_cell();
                if j >= 0 && (j as usize) < occ.len() {
                    occ[j as usize] += d * (hi.min(c + 1.0) - lo.max(c)) * grid.dx();
                }
                c += 1.0;
            }
        }
        occ.iter().map(|o| o * inv).collect()
    }
}

/// Binned field of the first `steps` segments of the path (time `steps·Δs`).
pub fn binned_prefix(path: &BrownianPath, grid: &SpatialGrid, steps: usize) -> Result<LocalTimeField> {
    binned_window(path, grid, 0, steps)
}

/// Bin averages of L_{t_to}^x − L_{t_from}^x: the occupation of the path
/// between grid steps `from` and `to`. The field's `time` is the duration.
pub fn binned_window(
    path: &BrownianPath,
    grid: &SpatialGrid,
    from: usize,
    to: usize,
) -> Result<LocalTimeField> {
    if from > to || to > path.n_steps() {
        return Err(Error::usage(format!(
            "step window [{from}, {to}] is not inside the path's {} steps",
            path.n_steps()
        )));
    }
    grid.check_covers(path)?;
    let ds = path.grid().step();
    let mut acc = Occupation::new(*grid);
    for w in path.values()[from..=to].windows(2) {
        acc.add_segment(w[0], w[1], ds);
    }
    Ok(acc.snapshot(path.grid().time(to) - path.grid().time(from)))
}

/// Exact piecewise-constant occupation density of the piecewise-linear path.
///
/// The density on each elementary interval is summed over the covering
/// segments in time order, so a path and its negation produce bit-identical
/// mirrored densities.
pub fn breakpoint_density(path: &BrownianPath) -> BreakpointDensity {
    let ds = path.grid().step();
    let mut clamped = 0;
    // (lo, hi, rate) per segment
    let segments: Vec<(f64, f64, f64)> = path
        .values()
        .windows(2)
        .map(|w| {
            let (lo, hi) = if w[0] <= w[1] { (w[0], w[1]) } else { (w[1], w[0]) };
            if hi - lo < MIN_INCREMENT {
                clamped += 1;
                let hi = (lo + MIN_INCREMENT).max(lo.next_up());
                (lo, hi, ds / (hi - lo))
            } else {
                (lo, hi, ds / (hi - lo))
            }
        })
        .collect();
    let mut events: Vec<(f64, bool, usize)> = Vec::with_capacity(2 * segments.len());
    for (i, s) in segments.iter().enumerate() {
        events.push((s.0, true, i));
        events.push((s.1, false, i));
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut breakpoints = Vec::new();
    let mut density = Vec::new();
    let mut active: BTreeSet<usize> = BTreeSet::new();
    let mut k = 0;
    while k < events.len() {
        let x = events[k].0;
        while k < events.len() && events[k].0 == x {
            let (_, start, i) = events[k];
            if start {
                active.insert(i);
            } else {
                active.remove(&i);
            }
            k += 1;
        }
        breakpoints.push(x);
        if k < events.len() {
            density.push(active.iter().map(|&i| segments[i].2).sum());
        }
    }
    BreakpointDensity {
        breakpoints,
        density,
        clamped,
        time: path.horizon(),
    }
}

/// Local-time fields at times `stride·Δs, 2·stride·Δs, …, t`, built by a
/// single incremental pass over the path.
#[derive(Debug, Clone)]
pub struct PrefixFieldStream<'a> {
    path: &'a BrownianPath,
    acc: Occupation,
    stride: usize,
    next_step: usize,
}

impl PrefixFieldStream<'_> {
    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn path(&self) -> &BrownianPath {
        self.path
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.acc.grid
    }

    /// Number of fields the stream emits in total.
    pub fn len(&self) -> usize {
        self.path.n_steps() / self.stride
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Iterator for PrefixFieldStream<'_> {
    type Item = (usize, LocalTimeField);

    /// Yields `(step index, field)` pairs.
    fn next(&mut self) -> Option<Self::Item> {
        let n = self.path.n_steps();
        if self.next_step >= n {
            return None;
        }
        let ds = self.path.grid().step();
        let v = self.path.values();
        let end = self.next_step + self.stride;
        for i in self.next_step..end {
            self.acc.add_segment(v[i], v[i + 1], ds);
        }
        self.next_step = end;
        Some((end, self.acc.snapshot(self.path.grid().time(end))))
    }
}

pub fn prefix_fields<'a>(
    path: &'a BrownianPath,
    grid: &SpatialGrid,
    stride: usize,
) -> Result<PrefixFieldStream<'a>> {
    if stride == 0 || path.n_steps() % stride != 0 {
        return Err(Error::usage(format!(
            "stride {stride} does not divide {} steps",
            path.n_steps()
        )));
    }
    grid.check_covers(path)?;
    Ok(PrefixFieldStream {
        path,
        acc: Occupation::new(*grid),
        stride,
        next_step: 0,
    })
}

/// Default stride: the smallest divisor of `n_steps` that emits at most 256
/// fields (exactly n_steps/256 when 256 divides n_steps).
pub fn default_stride(n_steps: usize) -> usize {
    let target = n_steps.div_ceil(256).max(1);
    (target..=n_steps).find(|d| n_steps % d == 0).unwrap_or(n_steps)
}

/// ∫ (w − |x − a|)₊ dx over `[lo, hi]`.
fn hat_integral(lo: f64, hi: f64, a: f64, w: f64) -> f64 {
    // antiderivative of the hat, zero left of its support
    let prim = |x: f64| {
        let u = (x - a).clamp(-w, w);
        if u <= 0.0 {
            0.5 * (w + u) * (w + u)
        } else {
            w * w - 0.5 * (w - u) * (w - u)
        }
    };
    prim(hi) - prim(lo)
}

/// |∫₀^t f(B_s) ds − ∫ f(x) ρ(x) dx| for the hat f(x) = (w − |x − a|)₊,
/// where ρ is the exact occupation density of the path.
///
/// Both sides are closed-form: the time integral segment by segment, the
/// space integral piece by piece of the density.
pub fn occupation_identity_residual(
    path: &BrownianPath,
    density: &BreakpointDensity,
    a: f64,
    w: f64,
) -> Result<f64> {
    if !(w > 0.0) {
        return Err(Error::usage(format!("hat half-width must be positive, got {w}")));
    }
    let ds = path.grid().step();
    let time_side: f64 = path
        .values()
        .windows(2)
        .map(|s| {
            let (lo, hi) = if s[0] <= s[1] { (s[0], s[1]) } else { (s[1], s[0]) };
            if hi > lo {
                ds * hat_integral(lo, hi, a, w) / (hi - lo)
            } else {
                ds * (w - (lo - a).abs()).max(0.0)
            }
        })
        .sum();
    let space_side: f64 = density
        .breakpoints
        .windows(2)
        .zip(&density.density)
        .map(|(x, rho)| rho * hat_integral(x[0], x[1], a, w))
        .sum();
    Ok((time_side - space_side).abs())
}

/// sup over emitted times r and grid points x of |L_r^{x+h} − L_r^x|.
pub fn modulus_sup(stream: PrefixFieldStream<'_>, h: f64) -> Result<f64> {
    let k = stream.grid().lattice_shift(h)? as i64;
    let mut sup: f64 = 0.0;
    for (_, field) in stream {
        sup = sup.max(field_modulus_sup(&field, k));
    }
    Ok(sup)
}

/// sup over x of |L^{x+h} − L^x| for one field, `k = h/Δx`.
pub fn field_modulus_sup(field: &LocalTimeField, k: i64) -> f64 {
    let m = field.values.len() as i64;
    (-k..m)
        .map(|j| (field.at(j + k) - field.at(j)).abs())
        .fold(0.0, f64::max)
}

/// sup over x of (L_t^x − L_s^x) for two fields on the same grid.
pub fn increment_sup(later: &LocalTimeField, earlier: &LocalTimeField) -> Result<f64> {
    if later.grid != earlier.grid {
        return Err(Error::usage("increment fields live on different grids"));
    }
    Ok(later
        .values
        .iter()
        .zip(&earlier.values)
        .map(|(a, b)| a - b)
        .fold(0.0, f64::max))
}
