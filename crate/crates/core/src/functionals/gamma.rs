//! The derivative of self-intersection local time at zero, γ_t, computed two
//! ways: the ε-regularized double time integral and its Itô representation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::local_time::{prefix_fields, LocalTimeField, SpatialGrid};
use crate::numerics::special::{gauss_dx, normal_cdf};
use crate::path::BrownianPath;

/// Largest grid on which the O(n²) regularized integral is evaluated.
pub const GAMMA_EPS_MAX_STEPS: usize = 1 << 13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum GammaMethod {
    EpsRegularized { eps: f64 },
    ItoRepresentation { stride: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaEstimate {
    pub value: f64,
    pub method: GammaMethod,
    /// Time step of the grid the estimate was computed on.
    pub ds: f64,
}

/// γ_t^ε = ∫₀^t ∫₀^u p'_ε(B_u − B_s) ds du by the trapezoid rule in both
/// variables. Paths finer than [`GAMMA_EPS_MAX_STEPS`] are subsampled by a
/// power of two first.
pub fn gamma_eps(path: &BrownianPath, eps: f64) -> Result<GammaEstimate> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::usage(format!("regularization eps must be positive, got {eps}")));
    }
    let coarse;
    let path = if path.n_steps() > GAMMA_EPS_MAX_STEPS {
        let factor = path.n_steps().div_ceil(GAMMA_EPS_MAX_STEPS).next_power_of_two();
        coarse = path.subsample(factor)?;
        &coarse
    } else {
        path
    };
    let b = path.values();
    let ds = path.grid().step();
    let mut outer = 0.0;
    for i in 1..b.len() {
        let bu = b[i];
        // trapezoid over s in [0, u_i]; the s = u endpoint contributes p'(0) = 0
        let mut inner = 0.5 * gauss_dx(bu - b[0], eps);
        for &bs in &b[1..i] {
            inner += gauss_dx(bu - bs, eps);
        }
        inner *= ds;
        outer += if i == b.len() - 1 { 0.5 * inner } else { inner };
    }
    Ok(GammaEstimate {
        value: outer * ds,
        method: GammaMethod::EpsRegularized { eps },
        ds,
    })
}

/// ∫₀^r p_{τ}(B_r − B_s) ds from the occupation field at time r, integrating
/// the kernel exactly over each bin.
pub(crate) fn kernel_occupation(field: &LocalTimeField, center: f64, tau: f64) -> f64 {
    let sd = tau.sqrt();
    field.integrate_against(|lo, hi| normal_cdf((center - lo) / sd) - normal_cdf((center - hi) / sd))
}

/// γ_t = 2∫₀^t (∫₀^r p_{t−r}(B_r − B_s) ds − L_r^{B_r}) dB_r as a forward Itô
/// sum over the times emitted by a prefix stream with the given stride.
///
/// L_r^{B_r} is read as the bin average at the bin containing B_r.
pub fn gamma_rep(path: &BrownianPath, grid: &SpatialGrid, stride: usize) -> Result<GammaEstimate> {
    let t = path.horizon();
    let b = path.values();
    let n = path.n_steps();
    let mut sum = 0.0;
    for (step, field) in prefix_fields(path, grid, stride)? {
        if step == n {
            break;
        }
        let br = b[step];
        let tau = t - field.time;
        let integrand = kernel_occupation(&field, br, tau) - field.value_at(br);
        sum += integrand * (b[step + stride] - br);
    }
    Ok(GammaEstimate {
        value: 2.0 * sum,
        method: GammaMethod::ItoRepresentation { stride },
        ds: path.grid().step(),
    })
}
