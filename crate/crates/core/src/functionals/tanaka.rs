//! Tanaka's formula for the time-reversed path, checked pathwise:
//!
//! ½(L_r^{B_r−x+h} − L_r^{B_r−x}) = −(−x+h)⁺ + (−x)⁺ + (B_r−x+h)⁺ − (B_r−x)⁺
//!                                   − ∫₀^r 1_{[−h,0]}(B_r − B_s − x) dB̂_s.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::local_time::{binned_prefix, SpatialGrid};
use crate::path::BrownianPath;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TanakaResidual {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

#[inline]
fn pos(x: f64) -> f64 {
    x.max(0.0)
}

/// Residual of the reversed Tanaka identity at grid time `r`.
///
/// The backward integral is the right-endpoint sum
/// Σ 1_{[−h,0]}(B_r − B_{s_{k+1}} − x)(B_{s_{k+1}} − B_{s_k}); local times are
/// bin averages of the prefix field at r.
pub fn reversed_tanaka_residual(
    path: &BrownianPath,
    grid: &SpatialGrid,
    x: f64,
    h: f64,
    r: f64,
) -> Result<TanakaResidual> {
    if !(h > 0.0) {
        return Err(Error::usage(format!("h must be positive, got {h}")));
    }
    let tg = path.grid();
    let steps = (r / tg.step()).round();
    let off_grid = (steps * tg.step() - r).abs() > 1e-9 * tg.step().max(r);
    if !(r > 0.0) || steps < 1.0 || steps > tg.n_steps() as f64 || off_grid {
        return Err(Error::usage(format!("r = {r} is not a positive grid time")));
    }
    let i = steps as usize;
    let b = path.values();
    let b_r = b[i];
    let field = binned_prefix(path, grid, i)?;
    let lhs = 0.5 * (field.value_at(b_r - x + h) - field.value_at(b_r - x));
    let backward: f64 = b[..=i]
        .windows(2)
        .filter(|w| {
            let u = b_r - w[1] - x;
            (-h..=0.0).contains(&u)
        })
        .map(|w| w[1] - w[0])
        .sum();
    let rhs = -pos(-x + h) + pos(-x) + pos(b_r - x + h) - pos(b_r - x) - backward;
    Ok(TanakaResidual {
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
    })
}
