//! Reproducible Brownian paths on uniform time grids.
//!
//! Every path is drawn from its own ChaCha8 stream: the key is expanded from
//! the master seed and the stream id is the path index, so a path never
//! depends on which thread produced it or on how many other paths exist.
//! Gaussian increments come from the ziggurat sampler in `rand_distr`
//! (`StandardNormal`), which is deterministic for a fixed build.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmt17;

/// Uniform grid on [0, t] with `n_steps` steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, n_steps: usize) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::usage(format!("time horizon must be positive, got {horizon}")));
        }
        if n_steps < 2 {
            return Err(Error::usage(format!("need at least 2 time steps, got {n_steps}")));
        }
        Ok(TimeGrid { horizon, n_steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    /// Time of grid point `i`; the last point is exactly the horizon.
    pub fn time(&self, i: usize) -> f64 {
        if i == self.n_steps {
            self.horizon
        } else {
            self.horizon * (i as f64 / self.n_steps as f64)
        }
    }
}

/// Master seed from which all per-path streams are derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
}

// domain tags keep the sampling and refinement streams apart
const DOMAIN_PATH: u64 = 0x5041_5448;
const DOMAIN_BRIDGE: u64 = 0x4252_4447;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl SeedSpec {
    pub fn new(master_seed: u64) -> Self {
        SeedSpec { master_seed }
    }

    /// Independent generator for `(domain, level, path_index)`.
    fn stream(&self, domain: u64, level: u64, path_index: u64) -> ChaCha8Rng {
        let mut state = self.master_seed ^ domain.rotate_left(32) ^ level.wrapping_mul(0x2545_f491_4f6c_dd1d);
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(path_index);
        rng
    }

    pub fn path_rng(&self, path_index: u64) -> ChaCha8Rng {
        self.stream(DOMAIN_PATH, 0, path_index)
    }
}

/// Sampled trajectory B_0 = 0, B_1, …, B_n on a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianPath {
    grid: TimeGrid,
    values: Vec<f64>,
    seed: u64,
    path_index: u64,
    antithetic: bool,
    refinements: u32,
}

impl BrownianPath {
    /// Wraps explicit values (synthetic and test paths).
    pub fn from_values(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_steps + 1 {
            return Err(Error::usage(format!(
                "path has {} values for a grid of {} steps",
                values.len(),
                grid.n_steps
            )));
        }
        if values[0] != 0.0 {
            return Err(Error::usage("path must start at 0"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("path contains non-finite values".into()));
        }
        Ok(BrownianPath {
            grid,
            values,
            seed: 0,
            path_index: 0,
            antithetic: false,
            refinements: 0,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path_index(&self) -> u64 {
        self.path_index
    }

    pub fn is_antithetic(&self) -> bool {
        self.antithetic
    }

    pub fn n_steps(&self) -> usize {
        self.grid.n_steps
    }

    pub fn horizon(&self) -> f64 {
        self.grid.horizon
    }

    pub fn end_value(&self) -> f64 {
        self.values[self.grid.n_steps]
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Path restricted to its first `steps` steps.
    pub fn truncated(&self, steps: usize) -> Result<BrownianPath> {
        if steps < 2 || steps > self.grid.n_steps {
            return Err(Error::usage(format!("cannot truncate to {steps} steps")));
        }
        let grid = TimeGrid::new(self.grid.time(steps), steps)?;
        Ok(BrownianPath {
            grid,
            values: self.values[..=steps].to_vec(),
            ..self.clone()
        })
    }

    /// Keeps every `factor`-th grid point.
    pub fn subsample(&self, factor: usize) -> Result<BrownianPath> {
        if factor == 0 || self.grid.n_steps % factor != 0 || self.grid.n_steps / factor < 2 {
            return Err(Error::usage(format!(
                "subsampling factor {factor} does not divide {} steps",
                self.grid.n_steps
            )));
        }
        let grid = TimeGrid::new(self.grid.horizon, self.grid.n_steps / factor)?;
        Ok(BrownianPath {
            grid,
            values: self.values.iter().step_by(factor).copied().collect(),
            ..self.clone()
        })
    }

    /// CSV dump with columns `index,time,value`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "index,time,value")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(out, "{},{},{}", i, fmt17(self.grid.time(i)), fmt17(*v))?;
        }
        Ok(())
    }
}

/// Draws path `path_index` of the ensemble keyed by `seed_spec`.
pub fn sample_path(seed_spec: &SeedSpec, path_index: u64, grid: TimeGrid) -> BrownianPath {
    let mut rng = seed_spec.path_rng(path_index);
    let sd = grid.step().sqrt();
    let mut values = Vec::with_capacity(grid.n_steps + 1);
    let mut b = 0.0;
    values.push(b);
    for _ in 0..grid.n_steps {
        let z: f64 = rng.sample(StandardNormal);
        b += sd * z;
        values.push(b);
    }
    BrownianPath {
        grid,
        values,
        seed: seed_spec.master_seed,
        path_index,
        antithetic: false,
        refinements: 0,
    }
}

/// Inserts Brownian-bridge points so the grid becomes `factor` times finer.
///
/// Refinement proceeds by repeated midpoint insertion; each midpoint is drawn
/// from N((B_l + B_r)/2, Δs_new/2) and the original grid values are kept
/// bit-for-bit.
pub fn refine(path: &BrownianPath, factor: usize) -> Result<BrownianPath> {
    if factor < 2 || !factor.is_power_of_two() {
        return Err(Error::usage(format!("refinement factor must be a power of two >= 2, got {factor}")));
    }
    if path.antithetic {
        // bridge noise is drawn for the original sign, so refinement commutes with negation
        let flip = |v: &mut f64| *v = -*v;
        let mut base = path.clone();
        base.values.iter_mut().for_each(flip);
        base.antithetic = false;
        let mut r = refine(&base, factor)?;
        r.values.iter_mut().for_each(flip);
        r.antithetic = true;
        return Ok(r);
    }
    let spec = SeedSpec::new(path.seed);
    let mut values = path.values.clone();
    let mut step = path.grid.step();
    let mut level = path.refinements;
    let mut remaining = factor;
    while remaining > 1 {
        let mut rng = spec.stream(DOMAIN_BRIDGE, u64::from(level), path.path_index);
        let sd = (0.25 * step).sqrt();
        let mut finer = Vec::with_capacity(2 * values.len() - 1);
        finer.push(values[0]);
        for w in values.windows(2) {
            let z: f64 = rng.sample(StandardNormal);
            finer.push(0.5 * (w[0] + w[1]) + sd * z);
            finer.push(w[1]);
        }
        values = finer;
        step *= 0.5;
        level += 1;
        remaining /= 2;
    }
    Ok(BrownianPath {
        grid: TimeGrid::new(path.grid.horizon, path.grid.n_steps * factor)?,
        values,
        seed: path.seed,
        path_index: path.path_index,
        antithetic: path.antithetic,
        refinements: level,
    })
}

/// Pointwise negation of the path, flagged as antithetic.
pub fn antithetic(path: &BrownianPath) -> BrownianPath {
    BrownianPath {
        values: path.values.iter().map(|v| -v).collect(),
        antithetic: !path.antithetic,
        ..path.clone()
    }
}
